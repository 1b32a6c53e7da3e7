//! Command-line front end: simulations, invariant reports, same-orbit
//! classification, chaos scans and figure data.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cmotion", version, about = "Constants of motion for first-order learning dynamics")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created when missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for random sampling; overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the fixed-point, inverse and orbit-matching tolerances.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the map and write a trajectory CSV plus a JSON summary.
    Simulate,
    /// Evaluate the configured invariant at each initial state.
    Invariant,
    /// Decide whether each target lies on the orbit of its initial state.
    Classify,
    /// Seeded scrambled-pair scan with a level-set confinement check.
    Scan,
    /// Emit trajectory and level-curve data for a reference figure.
    Figures {
        #[arg(value_enum)]
        which: Figure,
        /// Steps in each direction from every initial condition.
        #[arg(long, default_value_t = commands::figures::DEFAULT_STEPS)]
        steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
}

/// Loads the configuration and applies the global overrides.
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("/", "this subcommand needs --config"))?;
    let mut cfg = config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(tol) = cli.tolerance {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::config("--tolerance", format!("{tol} is not a positive number")));
        }
        cfg.tolerances.fixed_point = tol;
        cfg.tolerances.inverse = tol;
        if let Some(c) = cfg.classify.as_mut() {
            c.tol = tol;
        }
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Figures { which, steps } => commands::figures::run(*which, *steps, &cli.out),
        cmd => {
            let cfg = load_config(cli)?;
            match cmd {
                Command::Simulate => commands::simulate::run(&cfg, &cli.out),
                Command::Invariant => commands::invariant::run(&cfg, &cli.out),
                Command::Classify => commands::classify::run(&cfg, &cli.out),
                Command::Scan => commands::scan::run(&cfg, &cli.out),
                Command::Figures { .. } => unreachable!(),
            }
        }
    }
}
