//! Test metrics and validation-based choice of the model size `T*`.

use alloc::format;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::boosting::TrainTrace;
use crate::data::Task;
use crate::losses::{self, LossKind};
use crate::{Error, Result};

/// Metric to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// Mean squared error (regression).
    Mse,
    /// Error rate of the rule `+1 iff F > 0` (classification).
    Misclassification,
    /// Area under the ROC curve (classification).
    Auc,
    /// Mean training loss of the given loss.
    LossRisk(LossKind),
}

impl MetricKind {
    /// Short name used by the CLI and result files.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Mse => "mse",
            MetricKind::Misclassification => "misclass",
            MetricKind::Auc => "auc",
            MetricKind::LossRisk(_) => "lossrisk",
        }
    }

    /// Errors unless the metric applies to `task`.
    pub fn check_task(self, task: Task) -> Result<()> {
        let ok = match self {
            MetricKind::Mse => task == Task::Regression,
            MetricKind::Misclassification | MetricKind::Auc => task == Task::BinaryClassification,
            MetricKind::LossRisk(loss) => loss.task() == task,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "metric {} does not apply to a {} task",
                self.name(),
                task.name()
            )))
        }
    }
}

/// Parses `mse`, `misclass` or `auc`; `lossrisk` needs a loss and is built
/// directly.
impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(MetricKind::Mse),
            "misclass" | "misclassification" => Ok(MetricKind::Misclassification),
            "auc" => Ok(MetricKind::Auc),
            other => Err(Error::InvalidParameter(format!("unknown metric '{other}'"))),
        }
    }
}

/// Evaluates `kind` on predictions `f` against `targets`.
pub fn metric(kind: MetricKind, f: &[f64], targets: &[f64]) -> Result<f64> {
    if f.len() != targets.len() || f.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            f.len(),
            targets.len()
        )));
    }
    match kind {
        MetricKind::Mse => Ok(mse(f, targets)),
        MetricKind::Misclassification => misclassification(f, targets),
        MetricKind::Auc => auc(f, targets),
        MetricKind::LossRisk(loss) => Ok(losses::risk(loss, f, targets)),
    }
}

/// Mean of `(y - F)^2`.
pub fn mse(f: &[f64], targets: &[f64]) -> f64 {
    let s: f64 = f.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)).sum();
    s / f.len() as f64
}

/// `+1` if `F > 0`, else `-1`.
#[inline]
pub fn classify(f: f64) -> f64 {
    if f > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn require_both_classes(targets: &[f64]) -> Result<(usize, usize)> {
    let pos = targets.iter().filter(|&&y| y > 0.0).count();
    let neg = targets.len() - pos;
    if pos == 0 || neg == 0 {
        Err(Error::SingleClass)
    } else {
        Ok((pos, neg))
    }
}

/// Fraction of rows where the sign rule disagrees with the label.
pub fn misclassification(f: &[f64], targets: &[f64]) -> Result<f64> {
    require_both_classes(targets)?;
    let wrong = f
        .iter()
        .zip(targets)
        .filter(|(&p, &y)| classify(p) != y)
        .count();
    Ok(wrong as f64 / f.len() as f64)
}

/// `P(score+ > score-) + P(score+ = score-)/2` from the Mann-Whitney rank sum
/// with midranks for ties.
pub fn auc(scores: &[f64], targets: &[f64]) -> Result<f64> {
    let (pos, neg) = require_both_classes(targets)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j share their mean
        let midrank = (i + 1 + j) as f64 / 2.0;
        let positives = order[i..j].iter().filter(|&&r| targets[r] > 0.0).count();
        rank_sum_pos += midrank * positives as f64;
        i = j;
    }
    let (pos, neg) = (pos as f64, neg as f64);
    let u = rank_sum_pos - pos * (pos + 1.0) / 2.0;
    Ok(u / (pos * neg))
}

/// Chosen model size and the curve it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selected iteration in `1..=T`.
    pub t_star: usize,
    /// Validation risk at `t_star`.
    pub val_risk_at_t_star: f64,
    /// Full validation curve, index `t` is the risk of `F_t`.
    pub curve: Vec<f64>,
}

/// Smallest `t` in `1..=T` minimising the validation risk.
pub fn select_t_star(trace: &TrainTrace) -> Result<SelectionResult> {
    let curve = trace.val_risk.as_ref().ok_or(Error::MissingValidation)?;
    if curve.len() < 2 {
        return Err(Error::InvalidParameter(
            "validation curve has no boosted iterate".into(),
        ));
    }
    let mut t_star = 1;
    for t in 2..curve.len() {
        if curve[t] < curve[t_star] {
            t_star = t;
        }
    }
    Ok(SelectionResult {
        t_star,
        val_risk_at_t_star: curve[t_star],
        curve: curve.clone(),
    })
}
