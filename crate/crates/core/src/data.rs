//! Datasets, the dense feature matrix, and seeded train/validation/test splits.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::{rng, Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Wraps a row-major buffer of `rows * cols` values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable row `i`.
    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Element `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row-major backing buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Iterator over rows.
    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// New matrix with the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Kind of supervised problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// Real-valued targets.
    Regression,
    /// Targets in {-1, +1}.
    BinaryClassification,
}

impl Task {
    /// Lowercase name used in files and messages.
    pub fn name(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::BinaryClassification => "classification",
        }
    }
}

/// Features, targets and task kind. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    targets: Vec<f64>,
    task: Task,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Validates and builds a dataset.
    ///
    /// Requires at least one row and one column, finite values everywhere, one
    /// target per row, one name per column, and labels in {-1, +1} for
    /// classification.
    pub fn new(
        features: Matrix,
        targets: Vec<f64>,
        task: Task,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = (features.rows(), features.cols());
        if n == 0 || d == 0 {
            return Err(Error::Shape(format!(
                "dataset must be non-empty, got {n}x{d}"
            )));
        }
        if targets.len() != n {
            return Err(Error::Shape(format!(
                "{n} feature rows but {} targets",
                targets.len()
            )));
        }
        if feature_names.len() != d {
            return Err(Error::Shape(format!(
                "{d} feature columns but {} names",
                feature_names.len()
            )));
        }
        for (i, row) in features.iter_rows().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, column: j });
            }
        }
        for (i, &y) in targets.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::NonFinite { row: i, column: d });
            }
            if task == Task::BinaryClassification && y != 1.0 && y != -1.0 {
                return Err(Error::InvalidLabel { row: i, value: y });
            }
        }
        Ok(Self {
            features,
            targets,
            task,
            feature_names,
        })
    }

    /// Like [`Dataset::new`] with names `x1..xd`.
    pub fn with_default_names(features: Matrix, targets: Vec<f64>, task: Task) -> Result<Self> {
        let names = default_feature_names(features.cols());
        Self::new(features, targets, task, names)
    }

    /// Feature matrix.
    pub fn features(&self) -> &Matrix {
        &self.features
    }

    /// Targets.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Task kind.
    pub fn task(&self) -> Task {
        self.task
    }

    /// Column names.
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.features.rows()
    }

    /// Number of feature columns.
    pub fn d(&self) -> usize {
        self.features.cols()
    }

    /// Rows at `indices`, in that order. Indices must be in range and the
    /// selection non-empty.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Shape("empty row selection".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::Shape(format!(
                "row {bad} out of range for n={}",
                self.n()
            )));
        }
        Ok(Self {
            features: self.features.select_rows(indices),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            task: self.task,
            feature_names: self.feature_names.clone(),
        })
    }
}

/// `x1, x2, ..., xd`.
pub fn default_feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

/// Fractions and seed of a three-way split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    /// Fraction of rows used for training.
    pub train_fraction: f64,
    /// Fraction of rows used for validation.
    pub val_fraction: f64,
    /// Permutation seed.
    pub seed: u64,
}

impl SplitSpec {
    /// Checks `0 < train`, `0 < val` and `train + val < 1`.
    pub fn new(train_fraction: f64, val_fraction: f64, seed: u64) -> Result<Self> {
        let ok = train_fraction > 0.0 && val_fraction > 0.0 && train_fraction + val_fraction < 1.0;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "split fractions {train_fraction}/{val_fraction} must be positive and sum below 1"
            )));
        }
        Ok(Self {
            train_fraction,
            val_fraction,
            seed,
        })
    }

    /// The 50% / 25% / 25% protocol.
    pub fn standard(seed: u64) -> Self {
        Self {
            train_fraction: 0.5,
            val_fraction: 0.25,
            seed,
        }
    }
}

/// Row indices of the three parts of a split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    /// Training rows.
    pub train: Vec<usize>,
    /// Validation rows.
    pub val: Vec<usize>,
    /// Test rows.
    pub test: Vec<usize>,
}

/// Draws the seeded permutation of `0..n` and cuts it into
/// `floor(n * train)`, `floor(n * val)` and the remainder.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    SplitSpec::new(spec.train_fraction, spec.val_fraction, spec.seed)?;
    let n_train = libm::floor(n as f64 * spec.train_fraction) as usize;
    let n_val = libm::floor(n as f64 * spec.val_fraction) as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(Error::InvalidParameter(format!(
            "split of n={n} with fractions {}/{} leaves an empty part",
            spec.train_fraction, spec.val_fraction
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(spec.seed));
    let test = perm.split_off(n_train + n_val);
    let val = perm.split_off(n_train);
    Ok(SplitIndices {
        train: perm,
        val,
        test,
    })
}

/// Splits a dataset into (train, validation, test).
pub fn split_dataset(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let idx = split_indices(ds.n(), spec)?;
    Ok((
        ds.subset(&idx.train)?,
        ds.subset(&idx.val)?,
        ds.subset(&idx.test)?,
    ))
}
