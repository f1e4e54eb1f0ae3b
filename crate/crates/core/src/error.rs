//! Error type shared by all modules.

use alloc::string::String;

/// Errors produced by curve construction, pricing, simulation, and calibration.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input value or combination of inputs is invalid.
    #[error("invalid input: {message}")]
    InvalidInput {
        /// Human-readable description of the offending input.
        message: String,
    },

    /// A time does not sit on the `dt` grid, or an index is out of the
    /// surface bounds.
    #[error("grid misalignment: {message}")]
    GridMisalignment {
        /// Human-readable description of the misaligned quantity.
        message: String,
    },

    /// A numeric operation produced an unusable result (division by a
    /// vanishing annuity, non-finite intermediate, ...).
    #[error("numerical error: {message}")]
    Numerical {
        /// Human-readable description of the failure.
        message: String,
    },
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput {
            message: message.into(),
        }
    }

    pub(crate) fn grid(message: impl Into<String>) -> Self {
        Error::GridMisalignment {
            message: message.into(),
        }
    }

    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
