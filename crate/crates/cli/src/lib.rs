//! Command-line driver for the `sympass` experiments.
//!
//! Exit codes: 0 success (per-λ failures are recorded in the outputs),
//! 2 configuration or input error, 3 invariant violation.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{RunConfig, OUTPUT_ENV};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "sympass",
    version,
    about = "Symmetric mountain-pass experiments on grid energies"
)]
pub struct Cli {
    /// JSON run configuration; defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel per-λ runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Use the one-dimensional quartic surrogate `x²/2 - λx⁴/4`.
    #[arg(long, global = true)]
    pub surrogate: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Polarize a stored grid function toward its Schwarz symmetrization.
    Symmetrize {
        /// Grid-function CSV.
        input: PathBuf,
    },
    /// Mountain-pass values on the λ grid.
    Scan,
    /// Full harness: scan, sequences, refinement, corollary sequence.
    Trick,
    /// Hypothesis validators and property suites.
    Check {
        /// Random samples per property.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

/// Configuration after applying the file, flags and environment.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

/// Runs one invocation and returns the message to print.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve_config(cli)?;
    if cli.surrogate && !matches!(cli.command, Command::Scan) {
        return Err(CliError::Config("--surrogate is only supported by `scan`".into()));
    }
    let jobs = cli.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Symmetrize { input } => commands::symmetrize(&cfg, input),
        Command::Scan => commands::scan(&cfg, cli.surrogate),
        Command::Trick => commands::trick(&cfg),
        Command::Check { trials } => {
            let (outcomes, all) = commands::check(&cfg, *trials)?;
            let lines: Vec<String> = outcomes.iter().map(|o| o.line()).collect();
            if all {
                Ok(lines.join("\n"))
            } else {
                Err(CliError::Invariant(format!("checks failed:\n{}", lines.join("\n"))))
            }
        }
    })
}
