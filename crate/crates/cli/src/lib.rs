//! Command-line driver for `hypermetric`: instance configs, JSON reports and
//! metric grids.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{InstanceConfig, LambdaSpec, Source, Tolerances};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hypermetric", version, about = "Hyperbolic metrics with cone and cusp singularities")]
pub struct Cli {
    /// Instance config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory for grid files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Override a named tolerance, e.g. `--tol curvature=1e-6`. Repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VAL")]
    pub tol: Vec<String>,

    /// Seed for randomized check points.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every pole and zero in the region.
    Classify,
    /// Rouché comparison table for the h0 family, N = 2..=n_max.
    Rouche {
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
    /// Run the invariant battery; exits 1 if any check fails.
    Verify,
    /// Write the log-density grid as CSV (and optionally PGM).
    Grid {
        #[arg(long)]
        pgm: bool,
    },
    /// Locate the zeros of h in the region.
    Zeros,
    /// Estimate the half-plane threshold lambda_0.
    Lambda0,
}

fn instance(cli: &Cli) -> Result<commands::Instance, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs --config".into()))?;
    let mut config = InstanceConfig::load(path)?;
    for spec in &cli.tol {
        config.override_tolerance(spec)?;
    }
    commands::Instance::new(config)
}

/// Run a parsed command; returns the JSON for stdout. A failed `verify`
/// still produces its report, alongside [`CliError::CheckFailed`].
pub fn run(cli: &Cli) -> (Option<String>, Option<CliError>) {
    let result = match &cli.command {
        Command::Rouche { n_max } => commands::rouche(*n_max).map(|r| output::to_json(&r)),
        Command::Classify => instance(cli).and_then(|i| commands::classify(&i)).map(|r| output::to_json(&r)),
        Command::Zeros => instance(cli).and_then(|i| commands::zeros(&i)).map(|r| output::to_json(&r)),
        Command::Lambda0 => instance(cli).and_then(|i| commands::lambda0(&i)).map(|r| output::to_json(&r)),
        Command::Grid { pgm } => instance(cli)
            .and_then(|i| commands::grid(&i, &cli.out, *pgm))
            .map(|r| output::to_json(&r)),
        Command::Verify => match instance(cli).and_then(|i| commands::verify(&i, cli.seed)) {
            Ok(r) => {
                let failed = r.checks.iter().filter(|c| !c.passed).count();
                let json = output::to_json(&r);
                return (Some(json), (failed > 0).then_some(CliError::CheckFailed(failed)));
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(json) => (Some(json), None),
        Err(e) => (None, Some(e)),
    }
}
