//! Generators for the five synthetic benchmark models.
//!
//! Two designs are available for `X = (X_1, ..., X_d)`: i.i.d. uniform on
//! `(-1, 1)` and a centred Gaussian with covariance `2^{-|i-j|}`. Feature
//! indices in the model formulas are 1-based, so `X_1` is column 0.

use alloc::format;
use alloc::vec::Vec;
use core::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{Dataset, Matrix, Task};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// AR(1) coefficient of the correlated design; its stationary covariance is
/// `RHO^|i-j|`.
const RHO: f64 = 0.5;

/// Distribution of the design matrix rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    /// I.i.d. Uniform(-1, 1) entries.
    Uncorrelated,
    /// Gaussian rows, mean 0, covariance `2^{-|i-j|}`.
    Correlated,
}

impl DesignKind {
    /// One-letter tag: `u` or `c`.
    pub fn tag(self) -> &'static str {
        match self {
            DesignKind::Uncorrelated => "u",
            DesignKind::Correlated => "c",
        }
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" | "uncorrelated" => Ok(DesignKind::Uncorrelated),
            "c" | "correlated" => Ok(DesignKind::Correlated),
            other => Err(Error::InvalidParameter(format!("unknown design '{other}'"))),
        }
    }
}

/// Which model to draw, under which design, and how much of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    /// Model number, 1 to 5.
    pub model_id: u8,
    /// Design of the features.
    pub design: DesignKind,
    /// Number of rows.
    pub n: usize,
    /// Number of feature columns.
    pub d: usize,
    /// Generator seed.
    pub seed: u64,
}

impl ModelSpec {
    /// Validates the model number, `n >= 1` and that `d` covers every feature
    /// the formula reads.
    pub fn new(model_id: u8, design: DesignKind, n: usize, d: usize, seed: u64) -> Result<Self> {
        let needed = required_dimension(model_id)?;
        if n == 0 {
            return Err(Error::InvalidParameter(
                "sample size must be at least 1".into(),
            ));
        }
        if d < needed {
            return Err(Error::InvalidParameter(format!(
                "model {model_id} reads X_{needed} but d = {d}"
            )));
        }
        Ok(Self {
            model_id,
            design,
            n,
            d,
            seed,
        })
    }

    /// The model at its reference sample size and dimension.
    pub fn reference(model_id: u8, design: DesignKind, seed: u64) -> Result<Self> {
        let (n, d) = reference_size(model_id)?;
        Self::new(model_id, design, n, d, seed)
    }

    /// Task produced by this model.
    pub fn task(&self) -> Task {
        model_task(self.model_id)
    }
}

/// Largest 1-based feature index read by a model.
pub fn required_dimension(model_id: u8) -> Result<usize> {
    match model_id {
        1 => Ok(10),
        2 => Ok(4),
        3 => Ok(6),
        4 => Ok(10),
        5 => Ok(18),
        _ => Err(Error::InvalidParameter(format!(
            "model id {model_id} not in 1..=5"
        ))),
    }
}

/// Reference `(n, d)` of each model.
pub fn reference_size(model_id: u8) -> Result<(usize, usize)> {
    match model_id {
        1 => Ok((1000, 100)),
        2 => Ok((800, 100)),
        3 => Ok((1000, 500)),
        4 => Ok((2000, 30)),
        5 => Ok((1500, 50)),
        _ => Err(Error::InvalidParameter(format!(
            "model id {model_id} not in 1..=5"
        ))),
    }
}

/// Models 1-3 are regression, 4-5 classification.
pub fn model_task(model_id: u8) -> Task {
    if model_id >= 4 {
        Task::BinaryClassification
    } else {
        Task::Regression
    }
}

/// Variance of the additive Gaussian noise term (0 for noiseless models).
pub fn noise_variance(model_id: u8) -> f64 {
    match model_id {
        1 | 2 => 0.5,
        5 => 0.1,
        _ => 0.0,
    }
}

/// Evaluates a model formula on one feature row with a given noise draw.
///
/// `noise` is the realised `Z` term (already scaled to its variance) and is
/// ignored by the noiseless models 3 and 4.
pub fn response(model_id: u8, design: DesignKind, x: &[f64], noise: f64) -> f64 {
    let v = |j: usize| x[j - 1];
    let label = |b: bool| if b { 1.0 } else { -1.0 };
    match model_id {
        1 => v(1) * v(2) + v(3) * v(3) - v(4) * v(7) + v(8) * v(10) - v(6) * v(6) + noise,
        2 => -libm::sin(2.0 * v(1)) + v(2) * v(2) + v(3) - libm::exp(-v(4)) + noise,
        3 => v(1) + 3.0 * v(3) * v(3) - 2.0 * libm::exp(-v(5)) + v(6),
        4 => {
            let threshold = match design {
                DesignKind::Uncorrelated => 3.5,
                DesignKind::Correlated => 9.34,
            };
            let s: f64 = x[..10].iter().map(|t| t * t).sum();
            label(s > threshold)
        }
        5 => {
            let s = v(1) + v(4) * v(4) * v(4) + v(9) + libm::sin(v(12) * v(18)) + noise;
            label(s > 0.38)
        }
        _ => panic!("model id {model_id} not in 1..=5"),
    }
}

fn fill_design(rng: &mut Rng, n: usize, d: usize, design: DesignKind) -> Matrix {
    let mut m = Matrix::zeros(n, d);
    let innovation_scale = libm::sqrt(1.0 - RHO * RHO);
    for i in 0..n {
        let row = m.row_mut(i);
        match design {
            DesignKind::Uncorrelated => {
                for v in row.iter_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
            DesignKind::Correlated => {
                let mut prev: f64 = StandardNormal.sample(rng);
                row[0] = prev;
                for v in row.iter_mut().skip(1) {
                    let eps: f64 = StandardNormal.sample(rng);
                    prev = RHO * prev + innovation_scale * eps;
                    *v = prev;
                }
            }
        }
    }
    m
}

/// Draws an `n x d` design matrix.
pub fn sample_design(n: usize, d: usize, design: DesignKind, seed: u64) -> Result<Matrix> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "design needs n, d >= 1, got {n}x{d}"
        )));
    }
    Ok(fill_design(&mut rng::seeded(seed), n, d, design))
}

/// Generates a dataset from one of the five models.
///
/// The design matrix is drawn first, then one noise value per row for the
/// noisy models, all from one generator seeded with `spec.seed`.
pub fn generate_model(spec: &ModelSpec) -> Result<Dataset> {
    let spec = ModelSpec::new(spec.model_id, spec.design, spec.n, spec.d, spec.seed)?;
    let mut rng = rng::seeded(spec.seed);
    let x = fill_design(&mut rng, spec.n, spec.d, spec.design);
    let sd = libm::sqrt(noise_variance(spec.model_id));
    let targets: Vec<f64> = (0..spec.n)
        .map(|i| {
            let noise = if sd > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            } else {
                0.0
            };
            response(spec.model_id, spec.design, x.row(i), noise)
        })
        .collect();
    Dataset::with_default_names(x, targets, spec.task())
}
