//! The trained ensemble and prediction of any intermediate iterate `F_t`.

use alloc::format;
use alloc::vec::Vec;

use crate::boosting::{nesterov_schedule, Algorithm};
use crate::data::{Matrix, Task};
use crate::losses::{LossKind, LEAF_WEIGHT_BOUND};
use crate::trees::Tree;
use crate::{Error, Result};

/// Initial constant, shrinkage and ordered trees of a boosting run.
///
/// For AGB models the momentum weights are kept alongside the trees; they are
/// a pure function of the number of trees unless the model was trained with a
/// custom schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    algorithm: Algorithm,
    loss: LossKind,
    nu: f64,
    init: f64,
    task: Task,
    trees: Vec<Tree>,
    gamma: Vec<f64>,
    custom_schedule: bool,
}

impl BoostedModel {
    /// Assembles and validates a model. AGB models get the standard schedule.
    pub fn new(
        algorithm: Algorithm,
        loss: LossKind,
        nu: f64,
        init: f64,
        task: Task,
        trees: Vec<Tree>,
    ) -> Result<Self> {
        loss.check_task(task)?;
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidModel(format!("shrinkage {nu} not in (0, 1)")));
        }
        if !init.is_finite() {
            return Err(Error::InvalidModel("non-finite initial constant".into()));
        }
        if task == Task::BinaryClassification {
            for (s, tree) in trees.iter().enumerate() {
                for j in 0..tree.leaf_count() {
                    if tree.leaf_weight(j).abs() > LEAF_WEIGHT_BOUND {
                        return Err(Error::InvalidModel(format!(
                            "tree {s} leaf {j}: weight outside [-{LEAF_WEIGHT_BOUND}, {LEAF_WEIGHT_BOUND}]"
                        )));
                    }
                }
            }
        }
        let gamma = match algorithm {
            Algorithm::Gb => Vec::new(),
            Algorithm::Agb => nesterov_schedule(trees.len()).gamma,
        };
        Ok(Self::from_parts(
            algorithm, loss, nu, init, task, trees, gamma, false,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        algorithm: Algorithm,
        loss: LossKind,
        nu: f64,
        init: f64,
        task: Task,
        trees: Vec<Tree>,
        gamma: Vec<f64>,
        custom_schedule: bool,
    ) -> Self {
        Self {
            algorithm,
            loss,
            nu,
            init,
            task,
            trees,
            gamma,
            custom_schedule,
        }
    }

    /// GB or AGB.
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    /// Training loss.
    pub fn loss(&self) -> LossKind {
        self.loss
    }

    /// Shrinkage.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `F_0`.
    pub fn init(&self) -> f64 {
        self.init
    }

    /// Task kind.
    pub fn task(&self) -> Task {
        self.task
    }

    /// Trees in training order.
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Number of trees `T`.
    pub fn iterations(&self) -> usize {
        self.trees.len()
    }

    /// Momentum weights (empty for GB).
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// True when trained with a non-standard momentum schedule.
    pub fn has_custom_schedule(&self) -> bool {
        self.custom_schedule
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t > self.trees.len() {
            Err(Error::IterationOutOfRange {
                requested: t,
                available: self.trees.len(),
            })
        } else {
            Ok(())
        }
    }

    /// `F_t(x)` by replaying the recursion over the first `t` trees.
    ///
    /// Panics if `t > T`; see [`BoostedModel::predict_at`] for the checked
    /// version.
    pub fn predict_row_at(&self, x: &[f64], t: usize) -> f64 {
        let trees = &self.trees[..t];
        match self.algorithm {
            Algorithm::Gb => {
                let mut f = self.init;
                for tree in trees {
                    f += self.nu * tree.value(x);
                }
                f
            }
            Algorithm::Agb => {
                let (mut f, mut g) = (self.init, self.init);
                for (tree, &gamma) in trees.iter().zip(&self.gamma) {
                    let f_next = g + self.nu * tree.value(x);
                    g = (1.0 - gamma) * f_next + gamma * f;
                    f = f_next;
                }
                f
            }
        }
    }

    /// Smallest number of feature columns the trees can route.
    pub fn required_features(&self) -> usize {
        self.trees
            .iter()
            .flat_map(|tree| tree.splits())
            .map(|(feature, _)| feature + 1)
            .max()
            .unwrap_or(0)
    }

    /// `F_t` on every row of `x`.
    pub fn predict_at(&self, x: &Matrix, t: usize) -> Result<Vec<f64>> {
        self.check_t(t)?;
        let needed = self.required_features();
        if x.cols() < needed {
            return Err(Error::Shape(format!(
                "model splits on feature {needed} but the data have {} columns",
                x.cols()
            )));
        }
        Ok(x.iter_rows()
            .map(|row| self.predict_row_at(row, t))
            .collect())
    }

    /// `F_T` on every row of `x`.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let t = self.trees.len();
        x.iter_rows()
            .map(|row| self.predict_row_at(row, t))
            .collect()
    }

    /// Coefficients `a[s-1] = a_{t,s}` with `F_t = F_0 + nu * sum_s a_{t,s} h_s`,
    /// where `h_s` is the `s`-th tree.
    ///
    /// Both updates are affine, so `F_t` is a fixed linear combination of the
    /// trees. GB models give all ones.
    pub fn effective_coefficients(&self, t: usize) -> Result<Vec<f64>> {
        self.check_t(t)?;
        if self.algorithm == Algorithm::Gb {
            return Ok(alloc::vec![1.0; t]);
        }
        // a: coefficients of F_s, b: coefficients of G_s
        let mut a: Vec<f64> = Vec::with_capacity(t);
        let mut b: Vec<f64> = Vec::with_capacity(t);
        for s in 0..t {
            let gamma = self.gamma[s];
            let mut a_next = b.clone();
            a_next.push(1.0);
            b = a_next
                .iter()
                .enumerate()
                .map(|(i, &an)| (1.0 - gamma) * an + gamma * a.get(i).copied().unwrap_or(0.0))
                .collect();
            a = a_next;
        }
        Ok(a)
    }

    /// `F_0 + nu * sum_s coefficients[s] * h_s(x)`.
    pub fn predict_row_flat(&self, x: &[f64], coefficients: &[f64]) -> f64 {
        let s: f64 = self
            .trees
            .iter()
            .zip(coefficients)
            .map(|(tree, &c)| c * tree.value(x))
            .sum();
        self.init + self.nu * s
    }
}
