//! `svlab` — configuration-driven runner for the spectral-dynamics
//! Monte Carlo laboratory.
//!
//! One TOML config file describes one experiment; `run` executes it and
//! writes CSV artifacts plus a `summary.json`, `check` additionally gates the
//! summary against a thresholds file. All output is a pure function of
//! `(config, seed)`, independent of `--threads`.

mod check;
mod config;
mod experiments;
mod report;

use clap::{Parser, Subcommand};
use config::{ExperimentConfig, ExperimentKind};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 success, 1 I/O failure, 2 config error, 3 numerical
/// divergence, 4 threshold failure.
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_THRESHOLD: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "svlab",
    version,
    about = "Monte Carlo laboratory for spectral portfolio dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Run an experiment and gate its summary against a thresholds file.
    Check(RunArgs),
    /// List the available experiments.
    ListExperiments,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Cap the worker-thread count (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config's output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Thresholds file evaluated against the summary (required for `check`).
    #[arg(long)]
    check: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for (kind, blurb) in ExperimentKind::all() {
                println!("{:<20} {}", kind.name(), blurb);
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => dispatch(args, false),
        Command::Check(args) => dispatch(args, true),
    }
}

fn dispatch(args: RunArgs, require_check: bool) -> ExitCode {
    if require_check && args.check.is_none() {
        eprintln!("error: `check` requires --check THRESHOLDS");
        return ExitCode::from(EXIT_CONFIG);
    }
    match execute(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(args: RunArgs) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_str(&text).map_err(CliError::Config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let output_dir = args
        .output
        .clone()
        .or_else(|| config.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("out/{}", config.experiment.name())));

    let thresholds = match &args.check {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(check::parse_thresholds(&text).map_err(CliError::Config)?)
        }
    };

    let run = || report::run_experiment(&config);
    let (metrics, artifacts, wall_time_s) = match args.threads {
        None => run()?,
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            pool.install(run)?
        }
    };

    let summary = report::write_outputs(&config, &output_dir, metrics, artifacts, wall_time_s)?;
    println!("wrote {}", output_dir.join("summary.json").display());

    if let Some(criteria) = thresholds {
        let results = check::evaluate(&summary, &criteria);
        let mut all_pass = true;
        for r in &results {
            let measured = r
                .measured
                .map(|m| format!("{m}"))
                .unwrap_or_else(|| "missing".into());
            println!(
                "check {} {:?} {}: measured {} -> {}",
                r.criterion.path,
                r.criterion.comparator,
                r.criterion.bound,
                measured,
                if r.pass { "PASS" } else { "FAIL" }
            );
            all_pass &= r.pass;
        }
        if !all_pass {
            return Ok(ExitCode::from(EXIT_THRESHOLD));
        }
    }
    Ok(ExitCode::SUCCESS)
}
