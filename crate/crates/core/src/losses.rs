//! Convex losses `psi(x, y)` and the four primitives boosting needs from them:
//! the optimal constant, the pointwise negative gradient, the per-leaf line
//! search, and the empirical risk.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
use core::str::FromStr;

use crate::data::Task;
use crate::{Error, Result};

/// Bound applied to every exponent before `exp`.
pub const EXPONENT_CLAMP: f64 = 500.0;

/// Bound on classification leaf weights.
pub const LEAF_WEIGHT_BOUND: f64 = 4.0;

const NEWTON_MAX_ITER: usize = 20;
const NEWTON_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 60;

/// Supported losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `(y - x)^2`, regression.
    Squared,
    /// `exp(-y x)` (AdaBoost), classification.
    Exponential,
    /// `log2(1 + exp(-y x))`, classification.
    Logit,
}

impl LossKind {
    /// All losses.
    pub const ALL: [LossKind; 3] = [LossKind::Squared, LossKind::Exponential, LossKind::Logit];

    /// Lowercase name, as accepted by [`FromStr`].
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::Exponential => "exponential",
            LossKind::Logit => "logit",
        }
    }

    /// Task kind the loss is defined for.
    pub fn task(self) -> Task {
        match self {
            LossKind::Squared => Task::Regression,
            LossKind::Exponential | LossKind::Logit => Task::BinaryClassification,
        }
    }

    /// Default loss of a task.
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Regression => LossKind::Squared,
            Task::BinaryClassification => LossKind::Exponential,
        }
    }

    /// Errors unless the loss is defined for `task`.
    pub fn check_task(self, task: Task) -> Result<()> {
        if self.task() == task {
            Ok(())
        } else {
            Err(Error::IncompatibleLoss {
                loss: self.name(),
                task: task.name(),
            })
        }
    }

    /// Pointwise loss `psi(x, y)` for prediction `x` and target `y`.
    #[inline]
    pub fn psi(self, x: f64, y: f64) -> f64 {
        match self {
            LossKind::Squared => (y - x) * (y - x),
            LossKind::Exponential => clamped_exp(-y * x),
            LossKind::Logit => softplus(-clamp_exponent(y * x)) / LN_2,
        }
    }

    /// `-d psi / dx` at `(x, y)`. The squared loss returns the plain residual
    /// `y - x`.
    #[inline]
    pub fn neg_gradient(self, x: f64, y: f64) -> f64 {
        match self {
            LossKind::Squared => y - x,
            LossKind::Exponential => y * clamped_exp(-y * x),
            LossKind::Logit => y / (LN_2 * (1.0 + clamped_exp(y * x))),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" | "ls" => Ok(LossKind::Squared),
            "exponential" | "adaboost" => Ok(LossKind::Exponential),
            "logit" | "logistic" => Ok(LossKind::Logit),
            other => Err(Error::InvalidParameter(format!("unknown loss '{other}'"))),
        }
    }
}

#[inline]
fn clamp_exponent(a: f64) -> f64 {
    a.clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP)
}

#[inline]
fn clamped_exp(a: f64) -> f64 {
    libm::exp(clamp_exponent(a))
}

/// `ln(1 + e^u)` without overflow.
#[inline]
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + libm::log1p(libm::exp(-u))
    } else {
        libm::log1p(libm::exp(u))
    }
}

fn class_counts(targets: &[f64]) -> (usize, usize) {
    let pos = targets.iter().filter(|&&y| y > 0.0).count();
    (pos, targets.len() - pos)
}

/// Constant minimising `sum_i psi(z, y_i)`.
///
/// Mean for the squared loss, `ln(n+/n-)/2` for the exponential loss and
/// `ln(n+/n-)` for the logit loss. Classification needs both classes.
pub fn init_constant(loss: LossKind, targets: &[f64]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::Shape("no targets".into()));
    }
    match loss {
        LossKind::Squared => Ok(mean(targets)),
        LossKind::Exponential | LossKind::Logit => {
            let (pos, neg) = class_counts(targets);
            if pos == 0 || neg == 0 {
                return Err(Error::SingleClass);
            }
            let log_odds = libm::log(pos as f64 / neg as f64);
            Ok(if loss == LossKind::Exponential {
                0.5 * log_odds
            } else {
                log_odds
            })
        }
    }
}

/// Writes `-d psi(F_i, y_i) / dF_i` into `out`.
pub fn negative_gradient_into(
    loss: LossKind,
    predictions: &[f64],
    targets: &[f64],
    out: &mut [f64],
) {
    assert_eq!(predictions.len(), targets.len());
    assert_eq!(predictions.len(), out.len());
    for ((o, &f), &y) in out.iter_mut().zip(predictions).zip(targets) {
        *o = loss.neg_gradient(f, y);
    }
}

/// Pointwise negative gradient of the risk (up to the `1/n` factor).
pub fn negative_gradient(loss: LossKind, predictions: &[f64], targets: &[f64]) -> Vec<f64> {
    let mut out = alloc::vec![0.0; predictions.len()];
    negative_gradient_into(loss, predictions, targets, &mut out);
    out
}

/// Empirical risk `(1/n) sum_i psi(F_i, y_i)`.
pub fn risk(loss: LossKind, predictions: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(predictions.len(), targets.len());
    assert!(!predictions.is_empty(), "risk of an empty sample");
    leaf_risk(loss, predictions, targets, 0.0) / predictions.len() as f64
}

/// `sum_i psi(F_i + w, y_i)` over one leaf.
pub fn leaf_risk(loss: LossKind, predictions: &[f64], targets: &[f64], w: f64) -> f64 {
    predictions
        .iter()
        .zip(targets)
        .map(|(&f, &y)| loss.psi(f + w, y))
        .sum()
}

/// Line search of one leaf: the `w` minimising `sum_i psi(F_i + w, y_i)`.
///
/// Unconstrained in sign. Classification weights are clamped to
/// `[-LEAF_WEIGHT_BOUND, LEAF_WEIGHT_BOUND]`; since the objective is convex
/// and the returned point lies between 0 and the descent iterate, the leaf
/// risk at the result never exceeds the risk at `w = 0`.
pub fn leaf_weight(loss: LossKind, predictions: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(predictions.len(), targets.len());
    assert!(!predictions.is_empty(), "line search on an empty leaf");
    match loss {
        LossKind::Squared => {
            let s: f64 = targets.iter().zip(predictions).map(|(y, f)| y - f).sum();
            s / predictions.len() as f64
        }
        LossKind::Exponential => exponential_leaf_weight(predictions, targets),
        LossKind::Logit => logit_leaf_weight(predictions, targets),
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = values.map(|v| libm::exp(v - max)).sum();
    max + libm::log(s)
}

fn exponential_leaf_weight(predictions: &[f64], targets: &[f64]) -> f64 {
    let pairs = predictions.iter().zip(targets);
    let pos = log_sum_exp(pairs.clone().filter(|(_, &y)| y > 0.0).map(|(&f, _)| -f));
    let neg = log_sum_exp(pairs.filter(|(_, &y)| y <= 0.0).map(|(&f, _)| f));
    // a missing class makes one side -inf and the weight +-inf
    let w = 0.5 * (pos - neg);
    w.clamp(-LEAF_WEIGHT_BOUND, LEAF_WEIGHT_BOUND)
}

fn logit_derivatives(predictions: &[f64], targets: &[f64], w: f64) -> (f64, f64) {
    let mut grad = 0.0;
    let mut hess = 0.0;
    for (&f, &y) in predictions.iter().zip(targets) {
        let m = clamp_exponent(y * (f + w));
        // sigma(-m) = 1 / (1 + e^m)
        let s = 1.0 / (1.0 + libm::exp(m));
        grad -= y * s;
        hess += s * (1.0 - s);
    }
    (grad / LN_2, hess / LN_2)
}

fn logit_leaf_weight(predictions: &[f64], targets: &[f64]) -> f64 {
    let phi = |w: f64| leaf_risk(LossKind::Logit, predictions, targets, w);
    let mut w = 0.0;
    let mut current = phi(w);
    for _ in 0..NEWTON_MAX_ITER {
        let (grad, hess) = logit_derivatives(predictions, targets, w);
        if hess.is_nan() || hess <= 0.0 || grad == 0.0 {
            break;
        }
        let mut step = -grad / hess;
        let mut candidate = phi(w + step);
        let mut halvings = 0;
        while candidate > current && halvings < MAX_HALVINGS {
            step *= 0.5;
            candidate = phi(w + step);
            halvings += 1;
        }
        if candidate > current {
            break;
        }
        w += step;
        current = candidate;
        if step.abs() < NEWTON_TOL {
            break;
        }
    }
    w.clamp(-LEAF_WEIGHT_BOUND, LEAF_WEIGHT_BOUND)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
