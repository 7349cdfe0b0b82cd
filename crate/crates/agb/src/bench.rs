//! Replicated benchmark grid.
//!
//! For every task and replication `r` the data are drawn (or loaded) and split
//! 50/25/25 with seed `base_seed + r`. Each (algorithm, shrinkage) cell is then
//! trained to its iteration cap, `T*` is read off the validation curve and the
//! selected iterate `F_{T*}` is scored on the test part. Cells run in parallel;
//! results are gathered in a fixed order so reports are reproducible byte for
//! byte.
//!
//! Config files are TOML:
//!
//! ```toml
//! output_dir = "results"
//!
//! [desk_scale]          # optional, used with `apply = true` or `--desk-scale`
//! n = 1000
//! t_cap_gb = 2000
//! t_cap_agb = 500
//! replications = 3
//!
//! [[tasks]]
//! name = "model1-u"
//! source = { kind = "synthetic", model = 1, design = "u" }
//! algorithms = ["gb", "agb"]
//! nu_grid = [0.01, 0.1]
//! replications = 10
//! ```

use std::path::{Path, PathBuf};

use agb_core::boosting::{self, Algorithm, TrainConfig};
use agb_core::data::{split_dataset, Dataset, SplitSpec, Task};
use agb_core::evaluation::{self, select_t_star};
use agb_core::losses::{self, LossKind};
use agb_core::synthetic::{self, DesignKind, ModelSpec};
use rayon::prelude::*;
use serde::Deserialize;

use crate::csv_io::load_csv;
use crate::write::atomic_write;
use crate::{trace_file, Error, Result};

/// Shrinkage values of the reference grid.
pub const DEFAULT_NU_GRID: [f64; 5] = [1e-5, 0.001, 0.01, 0.1, 0.5];
/// Iteration cap for GB.
pub const DEFAULT_T_CAP_GB: usize = 10_000;
/// Iteration cap for AGB.
pub const DEFAULT_T_CAP_AGB: usize = 2_500;

/// Added to the data seed to obtain the split seed of synthetic tasks, so the
/// permutation stream differs from the one that drew the rows.
const SPLIT_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Where a task's rows come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Fresh draw of a synthetic model per replication.
    Synthetic {
        /// Model number, 1 to 5.
        model: u8,
        /// Feature design.
        design: DesignKind,
        /// Rows per draw.
        n: usize,
        /// Feature count.
        d: usize,
    },
    /// A fixed CSV file, re-split per replication.
    Csv {
        /// File path.
        path: PathBuf,
        /// Target column name.
        target_column: String,
        /// Task of the targets.
        task: Task,
    },
}

impl DataSource {
    /// Task of the targets.
    pub fn task(&self) -> Task {
        match self {
            DataSource::Synthetic { model, .. } => synthetic::model_task(*model),
            DataSource::Csv { task, .. } => *task,
        }
    }

    fn design_tag(&self) -> &'static str {
        match self {
            DataSource::Synthetic { design, .. } => design.tag(),
            DataSource::Csv { .. } => "",
        }
    }
}

/// One row block of the benchmark grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchTask {
    /// Label used in reports and trace file names.
    pub name: String,
    /// Data source.
    pub source: DataSource,
    /// Algorithms to compare.
    pub algorithms: Vec<Algorithm>,
    /// Loss to minimise.
    pub loss: LossKind,
    /// Shrinkage values.
    pub nu_grid: Vec<f64>,
    /// Iterations trained by GB.
    pub t_cap_gb: usize,
    /// Iterations trained by AGB.
    pub t_cap_agb: usize,
    /// Leaves per tree.
    pub leaves: usize,
    /// Minimum rows per leaf.
    pub min_leaf: usize,
    /// Number of independent draws/splits.
    pub replications: usize,
    /// Seed of replication 0.
    pub base_seed: u64,
    /// Write a risk curve per run.
    pub traces: bool,
}

impl BenchTask {
    /// Task on a synthetic model at its reference size with the reference grid
    /// and caps, both algorithms and the task's default loss.
    pub fn synthetic(name: &str, model: u8, design: DesignKind) -> Result<Self> {
        let (n, d) = synthetic::reference_size(model)?;
        let task = synthetic::model_task(model);
        Ok(Self {
            name: name.to_owned(),
            source: DataSource::Synthetic {
                model,
                design,
                n,
                d,
            },
            algorithms: vec![Algorithm::Gb, Algorithm::Agb],
            loss: LossKind::default_for(task),
            nu_grid: DEFAULT_NU_GRID.to_vec(),
            t_cap_gb: DEFAULT_T_CAP_GB,
            t_cap_agb: DEFAULT_T_CAP_AGB,
            leaves: 2,
            min_leaf: 1,
            replications: 1,
            base_seed: 0,
            traces: false,
        })
    }

    /// Iteration cap of `algorithm`.
    pub fn t_cap(&self, algorithm: Algorithm) -> usize {
        match algorithm {
            Algorithm::Gb => self.t_cap_gb,
            Algorithm::Agb => self.t_cap_agb,
        }
    }

    /// Checks every field, including that the training configs are valid.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("task '{}': {msg}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\', ',', '"', '\n']) {
            return bad("name must be non-empty without '/', '\\', ',', quotes or newlines".into());
        }
        if let DataSource::Synthetic {
            model,
            design,
            n,
            d,
        } = self.source
        {
            ModelSpec::new(model, design, n, d, 0)?;
        }
        self.loss.check_task(self.source.task())?;
        if self.algorithms.is_empty() {
            return bad("no algorithms".into());
        }
        if self.nu_grid.is_empty() {
            return bad("empty nu_grid".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        for &algorithm in &self.algorithms {
            for &nu in &self.nu_grid {
                TrainConfig::new(algorithm, self.loss, nu, self.t_cap(algorithm), self.leaves)?
                    .with_min_leaf(self.min_leaf)?;
            }
        }
        Ok(())
    }
}

/// Reduced sizes applied to every task.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeskScale {
    /// Apply without being asked on the command line.
    #[serde(default)]
    pub apply: bool,
    /// Rows per synthetic draw.
    pub n: Option<usize>,
    /// Features per synthetic draw.
    pub d: Option<usize>,
    /// GB iteration cap.
    pub t_cap_gb: Option<usize>,
    /// AGB iteration cap.
    pub t_cap_agb: Option<usize>,
    /// Replications.
    pub replications: Option<usize>,
}

impl DeskScale {
    fn apply_to(&self, task: &mut BenchTask) {
        if let DataSource::Synthetic { n, d, .. } = &mut task.source {
            *n = self.n.unwrap_or(*n);
            *d = self.d.unwrap_or(*d);
        }
        task.t_cap_gb = self.t_cap_gb.unwrap_or(task.t_cap_gb);
        task.t_cap_agb = self.t_cap_agb.unwrap_or(task.t_cap_agb);
        task.replications = self.replications.unwrap_or(task.replications);
    }
}

/// A full benchmark description.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Directory for `runs.csv`, `summary.csv` and `traces/`.
    pub output_dir: Option<PathBuf>,
    /// Grid blocks, reported in this order.
    pub tasks: Vec<BenchTask>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    output_dir: Option<PathBuf>,
    desk_scale: Option<DeskScale>,
    tasks: Vec<RawTask>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawSource {
    Synthetic {
        model: u8,
        design: String,
        n: Option<usize>,
        d: Option<usize>,
    },
    Csv {
        path: PathBuf,
        #[serde(default = "default_target")]
        target_col: String,
        task: String,
    },
}

fn default_target() -> String {
    "y".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    name: String,
    source: RawSource,
    algorithms: Option<Vec<String>>,
    loss: Option<String>,
    nu_grid: Option<Vec<f64>>,
    t_cap_gb: Option<usize>,
    t_cap_agb: Option<usize>,
    leaves: Option<usize>,
    min_leaf: Option<usize>,
    replications: Option<usize>,
    base_seed: Option<u64>,
    #[serde(default)]
    traces: bool,
}

/// Parses a task kind name: `regression` or `classification`.
pub fn parse_task(s: &str) -> Result<Task> {
    match s {
        "regression" => Ok(Task::Regression),
        "classification" => Ok(Task::BinaryClassification),
        other => Err(Error::Config(format!(
            "unknown task '{other}' (expected regression or classification)"
        ))),
    }
}

impl BenchConfig {
    /// Parses a config; relative paths are taken relative to `base_dir`.
    /// The `[desk_scale]` section is used when `desk_scale` is set or the
    /// section says `apply = true`.
    pub fn from_toml_str(text: &str, base_dir: &Path, desk_scale: bool) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_owned()))?;
        let scale = match raw.desk_scale {
            Some(s) if desk_scale || s.apply => Some(s),
            None if desk_scale => {
                return Err(Error::Config(
                    "desk scale requested but no [desk_scale] section".into(),
                ))
            }
            _ => None,
        };
        if raw.tasks.is_empty() {
            return Err(Error::Config("no [[tasks]]".into()));
        }
        let mut tasks = Vec::with_capacity(raw.tasks.len());
        for t in raw.tasks {
            let source = match t.source {
                RawSource::Synthetic {
                    model,
                    design,
                    n,
                    d,
                } => {
                    let (n0, d0) = synthetic::reference_size(model)?;
                    DataSource::Synthetic {
                        model,
                        design: design.parse()?,
                        n: n.unwrap_or(n0),
                        d: d.unwrap_or(d0),
                    }
                }
                RawSource::Csv {
                    path,
                    target_col,
                    task,
                } => DataSource::Csv {
                    path: base_dir.join(path),
                    target_column: target_col,
                    task: parse_task(&task)?,
                },
            };
            let algorithms = match t.algorithms {
                Some(names) => names
                    .iter()
                    .map(|a| a.parse())
                    .collect::<agb_core::Result<Vec<Algorithm>>>()?,
                None => vec![Algorithm::Gb, Algorithm::Agb],
            };
            let loss = match t.loss {
                Some(l) => l.parse()?,
                None => LossKind::default_for(source.task()),
            };
            let mut task = BenchTask {
                name: t.name,
                source,
                algorithms,
                loss,
                nu_grid: t.nu_grid.unwrap_or_else(|| DEFAULT_NU_GRID.to_vec()),
                t_cap_gb: t.t_cap_gb.unwrap_or(DEFAULT_T_CAP_GB),
                t_cap_agb: t.t_cap_agb.unwrap_or(DEFAULT_T_CAP_AGB),
                leaves: t.leaves.unwrap_or(2),
                min_leaf: t.min_leaf.unwrap_or(1),
                replications: t.replications.unwrap_or(1),
                base_seed: t.base_seed.unwrap_or(0),
                traces: t.traces,
            };
            if let Some(s) = &scale {
                s.apply_to(&mut task);
            }
            tasks.push(task);
        }
        let config = Self {
            output_dir: raw.output_dir.map(|p| base_dir.join(p)),
            tasks,
        };
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file.
    pub fn load(path: impl AsRef<Path>, desk_scale: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base, desk_scale)
    }

    /// Validates every task and checks that task names are unique.
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.tasks.iter().enumerate() {
            t.validate()?;
            if self.tasks[..i].iter().any(|u| u.name == t.name) {
                return Err(Error::Config(format!("duplicate task name '{}'", t.name)));
            }
            if t.traces && self.output_dir.is_none() {
                return Err(Error::Config(format!(
                    "task '{}' asks for traces but there is no output_dir",
                    t.name
                )));
            }
        }
        Ok(())
    }
}

/// Test-set scores of one trained cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Selected iteration.
    pub t_star: usize,
    /// Validation risk at `t_star`.
    pub val_risk: f64,
    /// Empirical test risk of `F_{T*}` under the training loss.
    pub test_risk: f64,
    /// Test MSE (regression).
    pub test_mse: Option<f64>,
    /// Test misclassification rate (classification).
    pub test_misclass: Option<f64>,
    /// Test AUC (classification).
    pub test_auc: Option<f64>,
}

/// One line of `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Task name.
    pub task: String,
    /// `u`, `c` or empty for CSV data.
    pub design: &'static str,
    /// Algorithm.
    pub algorithm: Algorithm,
    /// Loss.
    pub loss: LossKind,
    /// Shrinkage.
    pub nu: f64,
    /// Replication index.
    pub replication: usize,
    /// Data seed of the replication.
    pub seed: u64,
    /// Scores, or the error that stopped the cell.
    pub outcome: std::result::Result<RunMetrics, String>,
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    /// Arithmetic mean.
    pub mean: f64,
    /// Sample standard deviation.
    pub sd: f64,
}

impl MeanSd {
    /// Summary of `values`; `None` when empty.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, sd })
    }
}

/// One line of `summary.csv`: a (task, algorithm, nu) cell over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Task name.
    pub task: String,
    /// Design tag.
    pub design: &'static str,
    /// Algorithm.
    pub algorithm: Algorithm,
    /// Loss.
    pub loss: LossKind,
    /// Shrinkage.
    pub nu: f64,
    /// Successful runs.
    pub runs: usize,
    /// Failed runs.
    pub failures: usize,
    /// Selected iteration.
    pub t_star: Option<MeanSd>,
    /// Test risk under the training loss.
    pub test_risk: Option<MeanSd>,
    /// Test MSE.
    pub test_mse: Option<MeanSd>,
    /// Test misclassification rate.
    pub test_misclass: Option<MeanSd>,
    /// Test AUC.
    pub test_auc: Option<MeanSd>,
}

/// Everything a benchmark produced.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Per-run rows ordered by task, replication, algorithm, nu.
    pub runs: Vec<RunRecord>,
    /// Per-cell summaries ordered by task, algorithm, nu.
    pub summary: Vec<SummaryRow>,
}

impl BenchReport {
    /// Summary cell of `(task, algorithm, nu)`.
    pub fn cell(&self, task: &str, algorithm: Algorithm, nu: f64) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.task == task && s.algorithm == algorithm && s.nu == nu)
    }
}

fn data_seed(task: &BenchTask, replication: usize) -> u64 {
    task.base_seed.wrapping_add(replication as u64)
}

/// Train/validation/test parts of one replication.
pub fn replication_data(
    task: &BenchTask,
    replication: usize,
    loaded: Option<&Dataset>,
) -> Result<(Dataset, Dataset, Dataset)> {
    let seed = data_seed(task, replication);
    match (&task.source, loaded) {
        (
            &DataSource::Synthetic {
                model,
                design,
                n,
                d,
            },
            _,
        ) => {
            let ds = synthetic::generate_model(&ModelSpec::new(model, design, n, d, seed)?)?;
            let split = SplitSpec::standard(seed.wrapping_add(SPLIT_SEED_OFFSET));
            Ok(split_dataset(&ds, &split)?)
        }
        (DataSource::Csv { .. }, Some(ds)) => Ok(split_dataset(ds, &SplitSpec::standard(seed))?),
        (DataSource::Csv { path, .. }, None) => Err(Error::Config(format!(
            "{}: dataset not loaded",
            path.display()
        ))),
    }
}

fn trace_path(dir: &Path, task: &BenchTask, algorithm: Algorithm, nu: f64, r: usize) -> PathBuf {
    dir.join("traces").join(format!(
        "{}_{}_nu{}_r{}.csv",
        task.name,
        algorithm.name(),
        nu,
        r
    ))
}

fn run_cell(
    task: &BenchTask,
    parts: &(Dataset, Dataset, Dataset),
    algorithm: Algorithm,
    nu: f64,
    trace_out: Option<PathBuf>,
) -> Result<RunMetrics> {
    let (train, val, test) = parts;
    let config = TrainConfig::new(algorithm, task.loss, nu, task.t_cap(algorithm), task.leaves)?
        .with_min_leaf(task.min_leaf)?;
    let (model, trace) = boosting::train(train, &config, Some(val))?;
    if let Some(path) = trace_out {
        trace_file::save(&trace, path)?;
    }
    let selection = select_t_star(&trace)?;
    let f = model.predict_at(test.features(), selection.t_star)?;
    let y = test.targets();
    let (test_mse, test_misclass, test_auc) = match test.task() {
        Task::Regression => (Some(evaluation::mse(&f, y)), None, None),
        Task::BinaryClassification => (
            None,
            Some(evaluation::misclassification(&f, y)?),
            Some(evaluation::auc(&f, y)?),
        ),
    };
    Ok(RunMetrics {
        t_star: selection.t_star,
        val_risk: selection.val_risk_at_t_star,
        test_risk: losses::risk(task.loss, &f, y),
        test_mse,
        test_misclass,
        test_auc,
    })
}

/// Runs every cell of the grid and summarises it. Trace files, if requested,
/// are written under `output_dir/traces`; the two report tables are not
/// written (see [`write_report`]).
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut runs = Vec::new();
    for task in &config.tasks {
        let loaded = match &task.source {
            DataSource::Csv {
                path,
                target_column,
                task: kind,
            } => Some(load_csv(path, target_column, *kind)?),
            DataSource::Synthetic { .. } => None,
        };
        let cells: Vec<(Algorithm, f64)> = task
            .algorithms
            .iter()
            .flat_map(|&a| task.nu_grid.iter().map(move |&nu| (a, nu)))
            .collect();
        let per_replication: Vec<Vec<RunRecord>> = (0..task.replications)
            .into_par_iter()
            .map(|r| {
                let parts = replication_data(task, r, loaded.as_ref());
                cells
                    .par_iter()
                    .map(|&(algorithm, nu)| {
                        let outcome = match &parts {
                            Ok(parts) => {
                                let trace_out = match (&config.output_dir, task.traces) {
                                    (Some(dir), true) => {
                                        Some(trace_path(dir, task, algorithm, nu, r))
                                    }
                                    _ => None,
                                };
                                run_cell(task, parts, algorithm, nu, trace_out)
                                    .map_err(|e| e.to_string())
                            }
                            Err(e) => Err(e.to_string()),
                        };
                        RunRecord {
                            task: task.name.clone(),
                            design: task.source.design_tag(),
                            algorithm,
                            loss: task.loss,
                            nu,
                            replication: r,
                            seed: data_seed(task, r),
                            outcome,
                        }
                    })
                    .collect()
            })
            .collect();
        runs.extend(per_replication.into_iter().flatten());
    }
    let summary = summarize(config, &runs);
    Ok(BenchReport { runs, summary })
}

fn summarize(config: &BenchConfig, runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for task in &config.tasks {
        for &algorithm in &task.algorithms {
            for &nu in &task.nu_grid {
                let cell: Vec<&RunRecord> = runs
                    .iter()
                    .filter(|r| r.task == task.name && r.algorithm == algorithm && r.nu == nu)
                    .collect();
                let ok: Vec<&RunMetrics> = cell
                    .iter()
                    .filter_map(|r| r.outcome.as_ref().ok())
                    .collect();
                let stat = |get: fn(&RunMetrics) -> Option<f64>| {
                    MeanSd::of(&ok.iter().filter_map(|m| get(m)).collect::<Vec<_>>())
                };
                rows.push(SummaryRow {
                    task: task.name.clone(),
                    design: task.source.design_tag(),
                    algorithm,
                    loss: task.loss,
                    nu,
                    runs: ok.len(),
                    failures: cell.len() - ok.len(),
                    t_star: stat(|m| Some(m.t_star as f64)),
                    test_risk: stat(|m| Some(m.test_risk)),
                    test_mse: stat(|m| m.test_mse),
                    test_misclass: stat(|m| m.test_misclass),
                    test_auc: stat(|m| m.test_auc),
                });
            }
        }
    }
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// `runs.csv` contents.
pub fn runs_csv(report: &BenchReport) -> String {
    let mut out = String::from(
        "task,design,algorithm,loss,nu,replication,seed,t_star,val_risk,test_risk,test_mse,test_misclass,test_auc,status\n",
    );
    for r in &report.runs {
        let prefix = format!(
            "{},{},{},{},{},{},{}",
            r.task,
            r.design,
            r.algorithm.name(),
            r.loss.name(),
            r.nu,
            r.replication,
            r.seed
        );
        let rest = match &r.outcome {
            Ok(m) => format!(
                "{},{},{},{},{},{},ok",
                m.t_star,
                m.val_risk,
                m.test_risk,
                opt(m.test_mse),
                opt(m.test_misclass),
                opt(m.test_auc)
            ),
            Err(e) => format!(",,,,,,{}", csv_field(&format!("error: {e}"))),
        };
        out.push_str(&prefix);
        out.push(',');
        out.push_str(&rest);
        out.push('\n');
    }
    out
}

/// `summary.csv` contents.
pub fn summary_csv(report: &BenchReport) -> String {
    let mut out = String::from(
        "task,design,algorithm,loss,nu,runs,failures,mean_t_star,sd_t_star,mean_test_risk,sd_test_risk,mean_test_mse,sd_test_mse,mean_test_misclass,sd_test_misclass,mean_test_auc,sd_test_auc\n",
    );
    let pair = |s: Option<MeanSd>| match s {
        Some(s) => format!("{},{}", s.mean, s.sd),
        None => ",".to_owned(),
    };
    for s in &report.summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.task,
            s.design,
            s.algorithm.name(),
            s.loss.name(),
            s.nu,
            s.runs,
            s.failures,
            pair(s.t_star),
            pair(s.test_risk),
            pair(s.test_mse),
            pair(s.test_misclass),
            pair(s.test_auc)
        ));
    }
    out
}

/// Writes `runs.csv` and `summary.csv` into `dir`, each atomically.
pub fn write_report(report: &BenchReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    atomic_write(&dir.join("runs.csv"), runs_csv(report).as_bytes())?;
    atomic_write(&dir.join("summary.csv"), summary_csv(report).as_bytes())
}
