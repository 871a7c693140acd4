//! Command implementations behind the `dqfl` binary.
//!
//! Every command returns a [`CliError`] carrying its process exit code:
//! 2 for configuration problems and missing inputs, 1 for runtime failures.

pub mod commands;
pub mod config;
pub mod metrics;
pub mod svg;

use std::fmt;

pub use commands::{
    cmd_compare, cmd_ingest, cmd_report, cmd_rollback, cmd_run, cmd_verify, RollbackOptions, RunOptions, RunReport,
    VerifyOutcome,
};
pub use config::{ExperimentConfig, Profile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    /// Core configuration errors exit 2, everything else 1.
    pub fn from_core(e: dqfl_core::Error) -> Self {
        match e {
            dqfl_core::Error::Config(_) => CliError::config(e.to_string()),
            _ => CliError::runtime(e.to_string()),
        }
    }

    pub fn from_core_config(e: dqfl_core::Error) -> Self {
        CliError::config(e.to_string())
    }

    pub fn io(context: impl fmt::Display, e: std::io::Error) -> Self {
        CliError::runtime(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}
