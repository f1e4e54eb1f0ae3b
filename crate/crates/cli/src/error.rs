//! CLI error type with the exit-code mapping.
//!
//! Exit codes are the only success/failure channel: 0 clean, 1 a workflow
//! reported findings (flags, validation band violations), 2 malformed or
//! unusable input, 3 grid misalignment.

use std::path::Path;

/// Errors that abort a command.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, unparsable, or inadequate input data (exit 2).
    #[error("{0}")]
    Malformed(String),
    /// A time or index off the `dt` grid (exit 3).
    #[error("{0}")]
    Grid(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Malformed(_) => 2,
            CliError::Grid(_) => 3,
        }
    }

    pub(crate) fn in_file(path: &Path, what: impl std::fmt::Display) -> Self {
        CliError::Malformed(format!("{}: {what}", path.display()))
    }
}

impl From<hjmvol_core::Error> for CliError {
    fn from(e: hjmvol_core::Error) -> Self {
        match e {
            hjmvol_core::Error::GridMisalignment { .. } => CliError::Grid(e.to_string()),
            _ => CliError::Malformed(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
