//! Command-line front end of the `herdsim` binary.
//!
//! `herdsim <mode> --config <path> [--seed N] [--out DIR]` parses a JSON
//! configuration, runs the requested mode and writes CSV/JSON artifacts plus
//! a `manifest.json` holding the resolved configuration. Feeding the manifest
//! back as `--config` reproduces the run.
//!
//! Exit status: 0 on success, 1 on configuration or I/O errors, 2 when a
//! simulation fails numerically.

use std::path::{Path, PathBuf};

use clap::Parser;

pub mod config;
pub mod io;
pub mod run;

pub use config::{parse_config, parse_config_for, ConfigError, Mode, RunConfig, TimeUnit};
pub use run::run;

use crate::error::HerdError;

#[derive(Debug, Parser)]
#[command(name = "herdsim", version, about = "Herding-model simulation and analysis")]
pub struct Args {
    #[arg(value_enum)]
    pub mode: Mode,
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Failure of a CLI run, mapped to an exit status.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(String),
    Model(HerdError),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(HerdError::NumericFailure { .. } | HerdError::Absorbing) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

fn config_error(path: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        msg: msg.into(),
    }
}

/// Reads, resolves and runs a configuration file; `seed` overrides the
/// document's seed.
pub fn execute(mode: Mode, config: &Path, seed: Option<u64>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::io(config, e))?;
    let mut cfg = parse_config_for(&text, Some(mode)).map_err(CliError::Config)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    run(&cfg, out)
}

/// Entry point of the binary; returns the process exit status.
pub fn main_entry() -> i32 {
    let args = Args::parse();
    match execute(args.mode, &args.config, args.seed, &args.out) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("herdsim: {e}");
            e.exit_code()
        }
    }
}
