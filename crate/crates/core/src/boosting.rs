//! Gradient boosting (GB) and Nesterov-accelerated gradient boosting (AGB).
//!
//! Both loops fit a least-squares tree to the negative gradient of the
//! empirical risk, replace the tree's leaf values by a per-leaf line search,
//! and add the shrunk tree. AGB keeps a second sequence `G_t` and takes the
//! gradient and line search there:
//!
//! ```text
//! F_{t+1} = G_t + nu * h_{t+1}
//! G_{t+1} = (1 - gamma_t) F_{t+1} + gamma_t F_t
//! ```
//!
//! with `F_0 = G_0` the optimal constant and `gamma_t` from
//! [`nesterov_schedule`].

use alloc::format;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::data::Dataset;
use crate::losses::{self, LossKind};
use crate::model::BoostedModel;
use crate::trees::{SortedFeatures, Tree, TreeGrower};
use crate::{Error, Result};

/// Training algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Plain gradient boosting.
    Gb,
    /// Nesterov-accelerated gradient boosting.
    Agb,
}

impl Algorithm {
    /// Lowercase name, as accepted by [`FromStr`].
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gb => "gb",
            Algorithm::Agb => "agb",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gb" | "GB" => Ok(Algorithm::Gb),
            "agb" | "AGB" => Ok(Algorithm::Agb),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm '{other}'"
            ))),
        }
    }
}

/// Momentum weights of the accelerated recursion.
///
/// `lambda[0] = 0`, `lambda[t] = (1 + sqrt(1 + 4 lambda[t-1]^2)) / 2` and
/// `gamma[t] = (1 - lambda[t]) / lambda[t+1]`, so `gamma[0] = 1`,
/// `gamma[1] = 0` and `gamma[t]` lies in `(-1, 0)` afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct NesterovSchedule {
    /// `lambda[0..=T]`.
    pub lambda: Vec<f64>,
    /// `gamma[0..T]`.
    pub gamma: Vec<f64>,
}

impl NesterovSchedule {
    /// A schedule with every `gamma` equal to `value` (lambda left empty).
    /// With `value = 0` AGB reduces to GB.
    pub fn constant(iterations: usize, value: f64) -> Self {
        Self {
            lambda: Vec::new(),
            gamma: alloc::vec![value; iterations],
        }
    }
}

/// Schedule for `iterations` boosting steps.
pub fn nesterov_schedule(iterations: usize) -> NesterovSchedule {
    let mut lambda = Vec::with_capacity(iterations + 1);
    lambda.push(0.0f64);
    for t in 1..=iterations {
        let prev = lambda[t - 1];
        lambda.push((1.0 + libm::sqrt(1.0 + 4.0 * prev * prev)) / 2.0);
    }
    let gamma = (0..iterations)
        .map(|t| (1.0 - lambda[t]) / lambda[t + 1])
        .collect();
    NesterovSchedule { lambda, gamma }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// GB or AGB.
    pub algorithm: Algorithm,
    /// Loss to minimise.
    pub loss: LossKind,
    /// Shrinkage, in `(0, 1)`.
    pub nu: f64,
    /// Number of trees `T >= 1`.
    pub iterations: usize,
    /// Leaves per tree `k >= 2`.
    pub leaves: usize,
    /// Minimum rows per leaf, at least 1.
    pub min_leaf: usize,
}

impl TrainConfig {
    /// Validated configuration with `min_leaf = 1`.
    pub fn new(
        algorithm: Algorithm,
        loss: LossKind,
        nu: f64,
        iterations: usize,
        leaves: usize,
    ) -> Result<Self> {
        let c = Self {
            algorithm,
            loss,
            nu,
            iterations,
            leaves,
            min_leaf: 1,
        };
        c.validate()?;
        Ok(c)
    }

    /// Same configuration with another `min_leaf`.
    pub fn with_min_leaf(mut self, min_leaf: usize) -> Result<Self> {
        self.min_leaf = min_leaf;
        self.validate()?;
        Ok(self)
    }

    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shrinkage {} not in (0, 1)",
                self.nu
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "iterations must be at least 1".into(),
            ));
        }
        if self.leaves < 2 {
            return Err(Error::InvalidParameter(
                "trees need at least 2 leaves".into(),
            ));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidParameter(
                "min_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Risk of every iterate `F_t`, `t = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Training risk; index 0 is the constant model.
    pub train_risk: Vec<f64>,
    /// Validation risk, same indexing, when a validation set was given.
    pub val_risk: Option<Vec<f64>>,
}

/// Trains a model; AGB uses [`nesterov_schedule`].
pub fn train(
    train: &Dataset,
    config: &TrainConfig,
    val: Option<&Dataset>,
) -> Result<(BoostedModel, TrainTrace)> {
    let gamma = match config.algorithm {
        Algorithm::Gb => None,
        Algorithm::Agb => Some(nesterov_schedule(config.iterations).gamma),
    };
    run(train, config, val, gamma, false)
}

/// Trains an AGB model with a caller-supplied momentum schedule.
///
/// The model remembers the schedule for prediction but cannot be written to
/// the model file format, which always assumes the standard schedule.
pub fn train_with_schedule(
    train: &Dataset,
    config: &TrainConfig,
    val: Option<&Dataset>,
    schedule: &NesterovSchedule,
) -> Result<(BoostedModel, TrainTrace)> {
    if config.algorithm != Algorithm::Agb {
        return Err(Error::InvalidParameter(
            "a momentum schedule only applies to AGB".into(),
        ));
    }
    if schedule.gamma.len() < config.iterations {
        return Err(Error::InvalidParameter(format!(
            "schedule has {} weights for {} iterations",
            schedule.gamma.len(),
            config.iterations
        )));
    }
    let gamma = schedule.gamma[..config.iterations].to_vec();
    run(train, config, val, Some(gamma), true)
}

/// Per-point state of one sample (training or validation).
struct Iterates {
    f: Vec<f64>,
    g: Vec<f64>,
}

impl Iterates {
    fn constant(n: usize, init: f64) -> Self {
        Self {
            f: alloc::vec![init; n],
            g: alloc::vec![init; n],
        }
    }

    /// Gradient/line-search point: `G_t` for AGB, `F_t` for GB.
    fn anchor(&self, accelerated: bool) -> &[f64] {
        if accelerated {
            &self.g
        } else {
            &self.f
        }
    }

    fn step(&mut self, nu: f64, gamma: Option<f64>, weight_of: impl Fn(usize) -> f64) {
        match gamma {
            None => {
                for (i, f) in self.f.iter_mut().enumerate() {
                    *f += nu * weight_of(i);
                }
            }
            Some(gamma) => {
                for (i, (f, g)) in self.f.iter_mut().zip(self.g.iter_mut()).enumerate() {
                    let f_next = *g + nu * weight_of(i);
                    *g = (1.0 - gamma) * f_next + gamma * *f;
                    *f = f_next;
                }
            }
        }
    }
}

fn run(
    train: &Dataset,
    config: &TrainConfig,
    val: Option<&Dataset>,
    gamma: Option<Vec<f64>>,
    custom_schedule: bool,
) -> Result<(BoostedModel, TrainTrace)> {
    config.validate()?;
    let loss = config.loss;
    loss.check_task(train.task())?;
    if let Some(v) = val {
        loss.check_task(v.task())?;
        if v.d() != train.d() {
            return Err(Error::Shape(format!(
                "validation set has {} features, training set {}",
                v.d(),
                train.d()
            )));
        }
    }
    let x = train.features();
    let y = train.targets();
    let n = train.n();
    let init = losses::init_constant(loss, y)?;
    let accelerated = gamma.is_some();

    let mut state = Iterates::constant(n, init);
    let mut val_state = val.map(|v| Iterates::constant(v.n(), init));

    let mut train_risk = Vec::with_capacity(config.iterations + 1);
    train_risk.push(losses::risk(loss, &state.f, y));
    let mut val_risk = val.map(|v| {
        let mut r = Vec::with_capacity(config.iterations + 1);
        r.push(losses::risk(
            loss,
            &val_state.as_ref().unwrap().f,
            v.targets(),
        ));
        r
    });

    let mut grower = TreeGrower::new(SortedFeatures::new(x));
    let mut z = alloc::vec![0.0; n];
    let mut trees: Vec<Tree> = Vec::with_capacity(config.iterations);
    let mut leaf_f: Vec<Vec<f64>> = Vec::new();
    let mut leaf_y: Vec<Vec<f64>> = Vec::new();

    for t in 0..config.iterations {
        let anchor = state.anchor(accelerated);
        losses::negative_gradient_into(loss, anchor, y, &mut z);
        let mut tree = grower.grow(x, &z, config.leaves, config.min_leaf);

        let leaves = tree.leaf_count();
        leaf_f.resize_with(leaves.max(leaf_f.len()), Vec::new);
        leaf_y.resize_with(leaves.max(leaf_y.len()), Vec::new);
        for j in 0..leaves {
            leaf_f[j].clear();
            leaf_y[j].clear();
        }
        let assignment = grower.assignment();
        for i in 0..n {
            let j = assignment[i] as usize;
            leaf_f[j].push(anchor[i]);
            leaf_y[j].push(y[i]);
        }
        for j in 0..leaves {
            let w = losses::leaf_weight(loss, &leaf_f[j], &leaf_y[j]);
            tree.set_leaf_weight(j, w);
        }

        let gamma_t = gamma.as_ref().map(|g| g[t]);
        let assignment = grower.assignment();
        state.step(config.nu, gamma_t, |i| {
            tree.leaf_weight(assignment[i] as usize)
        });
        train_risk.push(losses::risk(loss, &state.f, y));

        if let (Some(v), Some(vs), Some(vr)) = (val, val_state.as_mut(), val_risk.as_mut()) {
            let vx = v.features();
            vs.step(config.nu, gamma_t, |i| tree.value(vx.row(i)));
            vr.push(losses::risk(loss, &vs.f, v.targets()));
        }
        trees.push(tree);
    }

    let model = BoostedModel::from_parts(
        config.algorithm,
        loss,
        config.nu,
        init,
        train.task(),
        trees,
        gamma.unwrap_or_default(),
        custom_schedule,
    );
    Ok((
        model,
        TrainTrace {
            train_risk,
            val_risk,
        },
    ))
}
