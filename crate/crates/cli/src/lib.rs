//! Scenario files, parameter sweeps and CSV output for sleeping-cell analysis.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("{0} quantities outside tolerance")]
    Tolerance(usize),
    #[error("output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numeric(_) => 3,
            Self::Tolerance(_) => 4,
        }
    }

    /// Wraps a core error with the quantity being computed.
    pub fn core(context: &str, e: sleepcell_core::Error) -> Self {
        use sleepcell_core::Error as E;
        match e {
            E::NonConvergence { .. } | E::SeriesTruncation { .. } => {
                Self::Numeric(format!("{context}: {e}"))
            }
            _ => Self::Config(format!("{context}: {e}")),
        }
    }
}
