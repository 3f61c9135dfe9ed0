//! Batch runner: JSON configuration in, deterministic JSON/CSV/SVG files out.

mod commands;
pub mod config;
pub mod output;
mod svg;

pub use config::{parse_config, Command, ExperimentConfig};

use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("computation failed: {0}")]
    Compute(String),
}

impl CliError {
    /// Process exit code: 3 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            _ => 1,
        }
    }
}

/// Exit code when every solve finished but some did not converge.
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug)]
pub struct RunOutcome {
    pub converged: bool,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

/// Runs `command` with `config`, writing every output file into `out_dir`.
pub fn run(command: Command, config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    if let Some(declared) = config.command {
        if declared != command {
            return Err(CliError::Config(format!(
                "command: config declares `{declared}` but `{command}` was requested"
            )));
        }
    }
    config.validate()?;
    let mut out = output::OutputDir::create(out_dir)?;
    let converged = commands::dispatch(command, config, &mut out)?;
    Ok(RunOutcome { converged, files: out.into_files() })
}
