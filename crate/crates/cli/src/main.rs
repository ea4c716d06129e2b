//! `segdet` — batch toolkit for segmentation-driven anomaly detection.
//!
//! Subcommands compose into a reproducible experiment:
//! `synth -> cpd -> featurize -> [cluster] -> train -> evaluate`, with
//! `compare` and `importance` for analysis. Every command writes its
//! resolved configuration next to its outputs and is deterministic given
//! that configuration.

mod commands;
mod config;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use segdet_core::error::Error;

#[derive(Parser)]
#[command(name = "segdet", version, about = "Segmentation-driven anomaly detection toolkit")]
struct Cli {
    /// Configuration file (TOML); flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master random seed (mandatory here or in the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker cap for parallel sections; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic regime-switching scenario with ground truth.
    Synth,
    /// Score change points per channel and extract discrete change points.
    Cpd {
        /// Frame CSV (`timestamp,<ch1>,...`).
        #[arg(long)]
        frame: PathBuf,
    },
    /// Build the enriched labeled dataset (change-point features and
    /// segment ids).
    Featurize {
        #[arg(long)]
        frame: PathBuf,
        /// Label CSV (`start,end,state`); omitted = all rows normal.
        #[arg(long)]
        noc: Option<PathBuf>,
        /// Change points from `cpd` (cps.json).
        #[arg(long)]
        cps: PathBuf,
    },
    /// Cluster each channel segment and append sub-cluster columns.
    Cluster {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        cps: PathBuf,
        /// kmeans | gmm | optics | hdbscan | all.
        #[arg(long)]
        algo: Option<String>,
    },
    /// Train a detector or staged pipeline on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Preset name or pipeline spec JSON path.
        #[arg(long)]
        pipeline: Option<String>,
    },
    /// Evaluate a trained model: ranking metrics, thresholded metrics,
    /// early-detection coverage and time to detection.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        noc: Option<PathBuf>,
        /// optimal-f1 | quantile.
        #[arg(long)]
        threshold_rule: Option<String>,
    },
    /// Train and evaluate a list of pipelines on one temporal split.
    Compare {
        #[arg(long)]
        dataset: PathBuf,
        /// JSON file with comparison specs; omitted = built-in five rows.
        #[arg(long)]
        specs: Option<PathBuf>,
        /// Chronological train fraction.
        #[arg(long)]
        split: Option<f64>,
    },
    /// Global and segment-level feature importance tables.
    Importance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        cps: PathBuf,
        /// Channel whose segment map scopes the permutation.
        #[arg(long)]
        channel: Option<String>,
    },
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 3,
        Error::RejectedInput(_) => 4,
        Error::SchemaMismatch(_) => 5,
        Error::ConvergenceFailure(_) => 6,
        Error::Undefined(_) => 7,
        _ => 1,
    }
}

fn error_kind(error: &Error) -> &'static str {
    match error {
        Error::RejectedInput(_) => "rejected_input",
        Error::Undefined(_) => "undefined",
        Error::ConvergenceFailure(_) => "convergence_failure",
        Error::SchemaMismatch(_) => "schema_mismatch",
        Error::Io(_) => "io",
        Error::Serialization(_) => "serialization",
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.global.seed = Some(seed);
    }
    if let Some(jobs) = cli.jobs {
        config.global.jobs = jobs;
    }
    if let Some(out) = &cli.out {
        config.global.out = Some(out.to_string_lossy().into_owned());
    }
    if config.global.jobs > 0 {
        // Worker count never changes results, only wall time.
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.global.jobs)
            .build_global()
            .map_err(|e| Error::RejectedInput(format!("thread pool: {e}")))?;
    }
    let out = PathBuf::from(
        config
            .global
            .out
            .clone()
            .ok_or_else(|| Error::RejectedInput("no output directory: set --out".into()))?,
    );

    match &cli.command {
        Command::Synth => commands::cmd_synth(&config, &out),
        Command::Cpd { frame } => commands::cmd_cpd(&config, frame, &out),
        Command::Featurize { frame, noc, cps } => {
            commands::cmd_featurize(&config, frame, noc.as_deref(), cps, &out)
        }
        Command::Cluster { dataset, cps, algo } => {
            if let Some(algo) = algo {
                config.cluster.algo = algo.clone();
            }
            commands::cmd_cluster(&config, dataset, cps, &out)
        }
        Command::Train { dataset, pipeline } => {
            if let Some(pipeline) = pipeline {
                config.train.pipeline = pipeline.clone();
            }
            commands::cmd_train(&config, dataset, &out)
        }
        Command::Evaluate { model, dataset, noc, threshold_rule } => {
            if let Some(rule) = threshold_rule {
                config.evaluate.threshold_rule = rule.clone();
            }
            commands::cmd_evaluate(&config, model, dataset, noc.as_deref(), &out)
        }
        Command::Compare { dataset, specs, split } => {
            if let Some(specs) = specs {
                config.compare.specs_file = specs.to_string_lossy().into_owned();
            }
            if let Some(split) = split {
                config.compare.split_fraction = *split;
            }
            commands::cmd_compare(&config, dataset, &out)
        }
        Command::Importance { model, dataset, cps, channel } => {
            if let Some(channel) = channel {
                config.importance.channel = channel.clone();
            }
            commands::cmd_importance(&config, model, dataset, cps, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let payload = serde_json::json!({
                "error": { "kind": error_kind(&error), "message": error.to_string() }
            });
            eprintln!("{payload}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
