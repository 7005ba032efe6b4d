//! `ggl`: toy verification, score training, reconstruction and benchmarks.

mod bench;
mod config;
mod output;
mod reconstruct;
mod toy1d;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "GGL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ggl", version, about = "Geometry-guided Langevin sampling of 2D implicit shapes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory. Takes precedence over GGL_OUT_DIR and the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sampler: gg, gg_constant, map, dps or daps.
    #[arg(long, global = true)]
    pub sampler: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Use analytic mixture scores and skip score-model training.
    #[arg(long, global = true)]
    pub analytic_only: bool,
    /// Validate the config and flags, then exit without running.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

impl Common {
    /// True when the caller asked only for validation; reports it.
    pub fn stop_after_validation(&self) -> bool {
        if self.dry_run {
            println!("config ok");
        }
        self.dry_run
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// 1D bimodal toy: sampled histograms against closed-form targets.
    Toy1d,
    /// Reconstruct one procedural shape from a simulated scan.
    Reconstruct,
    /// Run the sampler comparison over shapes, scan regimes and seeds.
    Bench {
        /// Run this many consecutive seeds starting at --seed (or 0).
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Train a noise predictor on a declared prior.
    TrainScore {
        /// Continue training from a saved model file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input.
    Config(String),
    /// A sampler or training run diverged.
    Divergence(String),
    /// Some bench cells failed; outputs were still written.
    Partial(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Divergence(_) => 2,
            Failure::Partial(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Divergence(m) | Failure::Partial(m) => m,
        }
    }
}

impl From<ggl_core::Error> for Failure {
    fn from(e: ggl_core::Error) -> Self {
        match e {
            ggl_core::Error::Divergence { .. } => Failure::Divergence(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Toy1d => toy1d::run(&cli.common),
        Command::Reconstruct => reconstruct::run(&cli.common),
        Command::Bench { seeds } => bench::run(&cli.common, seeds),
        Command::TrainScore { resume } => train::run(&cli.common, resume.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
