//! `knnq`: probabilistic forecasting pipeline for periodic time series.

mod config;
mod manifest;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};
use pipeline::Pipeline;

#[derive(Parser)]
#[command(
    name = "knnq",
    about = "Nearest-neighbor quantile forecasts for periodic time series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read the raw data file, normalize it and cache per-household frames.
    Ingest(StageArgs),
    /// Select features, transform targets and fit all quantile models.
    Train(StageArgs),
    /// Write test-half quantile forecasts for every configured model.
    Predict(StageArgs),
    /// Score the fitted models on the test half.
    Evaluate(StageArgs),
    /// Emit summary tables, per-coverage curves and the forecast fan.
    Report(StageArgs),
    /// Run ingest, train, evaluate and report in order.
    Run(StageArgs),
    /// Generate a deterministic sample dataset (wide CSV).
    Synth(SynthArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Household subset, comma separated.
    #[arg(long, value_delimiter = ',')]
    households: Option<Vec<String>>,
    /// Neighbor counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    knn: Option<Vec<usize>>,
    /// Polynomial degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,
    /// Run directory (overrides run.output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Selection seed (reserved; the chronological holdout ignores it).
    #[arg(long)]
    seed: Option<u64>,
}

impl StageArgs {
    fn load(&self) -> Result<RunConfig> {
        let overrides = Overrides {
            households: self.households.clone(),
            knn: self.knn.clone(),
            degrees: self.degrees.clone(),
            out: self.out.clone(),
            workers: self.workers,
            seed: self.seed,
        };
        RunConfig::load(&self.config, &overrides)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    households: usize,
    #[arg(long, default_value_t = 1096)]
    days: usize,
    #[arg(long, default_value_t = 15)]
    resolution_minutes: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => {
            Pipeline::new(args.load()?)?.ingest()?;
        }
        Command::Train(args) => {
            Pipeline::new(args.load()?)?.train()?;
        }
        Command::Predict(args) => {
            Pipeline::new(args.load()?)?.predict()?;
        }
        Command::Evaluate(args) => {
            Pipeline::new(args.load()?)?.evaluate()?;
        }
        Command::Report(args) => {
            Pipeline::new(args.load()?)?.report()?;
        }
        Command::Run(args) => {
            let mut pipeline = Pipeline::new(args.load()?)?;
            let outcome = pipeline.run()?;
            let hits: Vec<&str> = outcome
                .iter()
                .filter(|(_, hit)| *hit)
                .map(|(stage, _)| *stage)
                .collect();
            if hits.len() == outcome.len() {
                println!("run complete: all stages cache-hit");
            } else {
                println!("run complete: artifacts in {}", pipeline.dir().display());
            }
        }
        Command::Synth(args) => {
            let cfg = knnq_core::synth::SynthConfig {
                households: args.households,
                days: args.days,
                resolution_minutes: args.resolution_minutes,
                seed: args.seed,
            };
            if let Some(parent) = args.out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            let frames = knnq_core::synth::generate(&cfg).context("stage synth")?;
            knnq_core::synth::write_wide_csv(&frames, &args.out).context("stage synth")?;
            println!(
                "wrote {} households x {} days to {}",
                args.households,
                args.days,
                args.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
