//! `deteriorate`: synthesize cohorts, check data quality, extract features and
//! run the early-warning and risk-prediction experiments.

mod commands;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deteriorate_core::Error as CoreError;

#[derive(Debug, Parser)]
#[command(name = "deteriorate", version, about = "Clinical deterioration prediction from wearable data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random choice; overrides the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort directory.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Parse and validate a cohort, reporting rejected rows.
    Ingest {
        #[arg(long)]
        cohort: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Yield, reliability, latency and compliance alerts.
    PipelineReport {
        #[arg(long)]
        cohort: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Patient-level feature matrix over the first monitored days.
    Features {
        #[arg(long)]
        cohort: PathBuf,
        /// Days of monitoring to use (default: the configured risk `k_days`).
        #[arg(long)]
        days: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Train and save a weighted one-class SVM on the normal windows.
    Train {
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long, default_value_t = 2)]
        window: u32,
        #[arg(long, default_value_t = 1)]
        horizon: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Anomaly-detection grid over window and horizon.
    EarlyWarn {
        #[arg(long, required_unless_present = "benchmark")]
        cohort: Option<PathBuf>,
        /// Run on the planted-outlier feature benchmark instead of a cohort.
        #[arg(long, conflicts_with = "cohort")]
        benchmark: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Repeated cross-validation of the risk classifiers with the LACE reference.
    Risk {
        #[arg(long)]
        cohort: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// Errors the user can fix by changing the command line or the configuration.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Config(_) => 2,
                CoreError::Invariant(_) => 4,
                _ => 3,
            };
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Synth { common }
        | Command::Ingest { common, .. }
        | Command::PipelineReport { common, .. }
        | Command::Features { common, .. }
        | Command::Train { common, .. }
        | Command::EarlyWarn { common, .. }
        | Command::Risk { common, .. } => common.clone(),
    };
    env_logger::Builder::new()
        .filter_level(if common.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .init();

    let workers = common.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(2);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Synth { common } => commands::synth(&common, workers),
        Command::Ingest { cohort, common } => commands::ingest(&cohort, &common, workers),
        Command::PipelineReport { cohort, common } => commands::pipeline_report(&cohort, &common, workers),
        Command::Features { cohort, days, common } => commands::features(&cohort, days, &common, workers),
        Command::Train { cohort, window, horizon, common } => commands::train(&cohort, window, horizon, &common, workers),
        Command::EarlyWarn { cohort, benchmark, common } => commands::early_warn(cohort.as_deref(), benchmark, &common, workers),
        Command::Risk { cohort, common } => commands::risk(&cohort, &common, workers),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
