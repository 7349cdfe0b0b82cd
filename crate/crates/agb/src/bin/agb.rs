use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agb::bench::{self, BenchConfig};
use agb::{csv_io, model_file, trace_file, Error, Result};
use agb_core::boosting::{self, Algorithm, TrainConfig};
use agb_core::data::Task;
use agb_core::evaluation::{self, select_t_star, MetricKind};
use agb_core::losses::LossKind;
use agb_core::synthetic::{self, DesignKind, ModelSpec};
use clap::{Parser, Subcommand};

/// Gradient boosting and accelerated gradient boosting with regression trees.
#[derive(Parser)]
#[command(name = "agb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic benchmark dataset and write it as CSV.
    Simulate {
        /// Model number, 1 to 5.
        #[arg(long)]
        model: u8,
        /// Design: u (uncorrelated) or c (correlated).
        #[arg(long, default_value = "u")]
        design: DesignKind,
        /// Rows; defaults to the model's reference size.
        #[arg(long)]
        n: Option<usize>,
        /// Features; defaults to the model's reference size.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model on a CSV training set.
    Train {
        /// gb or agb.
        #[arg(long)]
        algo: Algorithm,
        /// squared, exponential or logit; defaults from --task.
        #[arg(long)]
        loss: Option<LossKind>,
        /// regression or classification; defaults from --loss.
        #[arg(long, value_parser = bench::parse_task)]
        task: Option<Task>,
        /// Shrinkage in (0, 1).
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        iterations: usize,
        #[arg(long, default_value_t = 2)]
        leaves: usize,
        #[arg(long, default_value_t = 1)]
        min_leaf: usize,
        #[arg(long)]
        train: PathBuf,
        /// Validation CSV; enables the validation curve and T* report.
        #[arg(long)]
        valid: Option<PathBuf>,
        #[arg(long, default_value = "y")]
        target_col: String,
        #[arg(long)]
        model_out: PathBuf,
        /// Write the per-iteration risks as CSV.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Write F_t for every row of a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Iterate to use; defaults to the last one.
        #[arg(long)]
        at_iteration: Option<usize>,
        /// Column ignored if present in the data.
        #[arg(long, default_value = "y")]
        target_col: String,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a model on a labelled CSV file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// mse, misclass, auc or lossrisk.
        #[arg(long)]
        metric: String,
        #[arg(long)]
        at_iteration: Option<usize>,
        #[arg(long, default_value = "y")]
        target_col: String,
    },
    /// Run a benchmark grid described by a TOML config.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Apply the config's [desk_scale] section.
        #[arg(long)]
        desk_scale: bool,
        /// Overrides the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn simulate(
    model: u8,
    design: DesignKind,
    n: Option<usize>,
    d: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (n0, d0) = synthetic::reference_size(model)?;
    let spec = ModelSpec::new(model, design, n.unwrap_or(n0), d.unwrap_or(d0), seed)?;
    let ds = synthetic::generate_model(&spec)?;
    csv_io::save_csv(&ds, out, "y")?;
    eprintln!(
        "wrote {} rows x {} features to {}",
        ds.n(),
        ds.d(),
        out.display()
    );
    Ok(())
}

fn resolve_loss(loss: Option<LossKind>, task: Option<Task>) -> Result<(LossKind, Task)> {
    match (loss, task) {
        (Some(l), Some(t)) => {
            l.check_task(t)?;
            Ok((l, t))
        }
        (Some(l), None) => Ok((l, l.task())),
        (None, Some(t)) => Ok((LossKind::default_for(t), t)),
        (None, None) => Ok((LossKind::Squared, Task::Regression)),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            model,
            design,
            n,
            d,
            seed,
            out,
        } => simulate(model, design, n, d, seed, &out),
        Command::Train {
            algo,
            loss,
            task,
            nu,
            iterations,
            leaves,
            min_leaf,
            train,
            valid,
            target_col,
            model_out,
            trace_out,
        } => {
            let (loss, task) = resolve_loss(loss, task)?;
            let config =
                TrainConfig::new(algo, loss, nu, iterations, leaves)?.with_min_leaf(min_leaf)?;
            let train_ds = csv_io::load_csv(&train, &target_col, task)?;
            let valid_ds = valid
                .map(|p| csv_io::load_csv(&p, &target_col, task))
                .transpose()?;
            if let Some(v) = &valid_ds {
                if v.d() != train_ds.d() {
                    return Err(Error::Core(agb_core::Error::Shape(format!(
                        "validation data have {} features, training data {}",
                        v.d(),
                        train_ds.d()
                    ))));
                }
            }
            let (model, trace) = boosting::train(&train_ds, &config, valid_ds.as_ref())?;
            model_file::save(&model, &model_out)?;
            if let Some(path) = trace_out {
                trace_file::save(&trace, path)?;
            }
            let last = trace.train_risk[iterations];
            print!(
                "trained {} trees, final training risk {last}",
                model.iterations()
            );
            if trace.val_risk.is_some() {
                let sel = select_t_star(&trace)?;
                print!(
                    ", T* = {} (validation risk {})",
                    sel.t_star, sel.val_risk_at_t_star
                );
            }
            println!();
            Ok(())
        }
        Command::Predict {
            model,
            data,
            at_iteration,
            target_col,
            out,
        } => {
            let model = model_file::load(&model)?;
            let (x, _) = csv_io::load_features(&data, Some(&target_col))?;
            let t = at_iteration.unwrap_or(model.iterations());
            let f = model.predict_at(&x, t)?;
            let mut text = String::new();
            match model.task() {
                Task::Regression => {
                    text.push_str("prediction\n");
                    for v in &f {
                        text.push_str(&format!("{v}\n"));
                    }
                }
                Task::BinaryClassification => {
                    text.push_str("prediction,label\n");
                    for v in &f {
                        text.push_str(&format!("{v},{}\n", evaluation::classify(*v)));
                    }
                }
            }
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Evaluate {
            model,
            data,
            metric,
            at_iteration,
            target_col,
        } => {
            let model = model_file::load(&model)?;
            let kind = match metric.as_str() {
                "lossrisk" => MetricKind::LossRisk(model.loss()),
                other => other.parse()?,
            };
            kind.check_task(model.task())?;
            let ds = csv_io::load_csv(&data, &target_col, model.task())?;
            let t = at_iteration.unwrap_or(model.iterations());
            let f = model.predict_at(ds.features(), t)?;
            println!("{}", evaluation::metric(kind, &f, ds.targets())?);
            Ok(())
        }
        Command::Benchmark {
            config,
            desk_scale,
            output_dir,
        } => {
            let mut config = BenchConfig::load(&config, desk_scale)?;
            if output_dir.is_some() {
                config.output_dir = output_dir;
            }
            let dir = config
                .output_dir
                .clone()
                .ok_or_else(|| Error::Config("no output_dir given".into()))?;
            let report = bench::run_benchmark(&config)?;
            bench::write_report(&report, &dir)?;
            let failures = report.runs.iter().filter(|r| r.outcome.is_err()).count();
            println!(
                "{} runs ({failures} failed); reports in {}",
                report.runs.len(),
                dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("agb: error: {e}");
            ExitCode::FAILURE
        }
    }
}
