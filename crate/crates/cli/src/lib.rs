//! Subcommand implementations behind the `topobar` binary.

pub mod commands;
pub mod config;
pub mod svg;

pub use config::{PipelineArgs, RunConfig};

/// Failure classes mapped to process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input files or arguments: exit code 1.
    #[error("{0}")]
    Input(String),
    /// A broken internal invariant: exit code 2.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<topobar::Error> for CliError {
    fn from(e: topobar::Error) -> Self {
        match e {
            topobar::Error::InvalidComplex(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}
