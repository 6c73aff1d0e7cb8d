//! Scenario runner and comparison harness around `cqec-core`: TOML
//! configuration files, code definition files, CSV time series, engine
//! comparison reports, and parameter sweeps.

pub mod codefile;
pub mod config;
pub mod csvio;
pub mod engines;
pub mod report;
pub mod sweep;

use std::process::ExitCode;

use thiserror::Error;

/// Process-level failure classes; each maps to a documented exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 1: a stabilizer code failed validation.
    #[error("invalid code: {0}")]
    InvalidCode(String),
    /// Exit 2: unreadable, unparseable, or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Exit 3: an engine aborted mid-run.
    #[error("integration failure: {0}")]
    Integration(String),
    /// Exit 4: engines disagree beyond the configured tolerances.
    #[error("tolerance breach: {0}")]
    ToleranceBreach(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::InvalidCode(_) => ExitCode::from(1),
            CliError::Config(_) => ExitCode::from(2),
            CliError::Integration(_) => ExitCode::from(3),
            CliError::ToleranceBreach(_) => ExitCode::from(4),
        }
    }
}

impl From<cqec_core::DynamicsError> for CliError {
    fn from(err: cqec_core::DynamicsError) -> Self {
        use cqec_core::DynamicsError::*;
        match &err {
            InvariantViolation { .. } | NumericalConsistency(_) => {
                CliError::Integration(err.to_string())
            }
            Scenario(_) | SpecInvalid(_) | Unsupported(_) | InvalidState(_) => {
                CliError::Config(err.to_string())
            }
            Code(_) => CliError::InvalidCode(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Config(format!("io: {err}"))
    }
}
