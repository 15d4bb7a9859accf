//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]. The CLI maps errors to process
//! exit code 3 (numeric/domain problems), reserving 0 for success, 1 for
//! verification-suite failures and 2 for argument-parsing problems.

use thiserror::Error;

/// Errors produced by table construction, evaluators and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A size or range precondition was violated (table limits, caps).
    #[error("out of bounds: {0}")]
    Bounds(String),
    /// A mathematical domain precondition was violated (coprimality,
    /// squarefreeness, duplicate offsets, ...).
    #[error("domain violation: {0}")]
    Domain(String),
    /// A numeric routine failed to reach its target accuracy.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Malformed configuration or calibration data.
    #[error("config error: {0}")]
    Config(String),
    /// Underlying I/O failure (result files, config files).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for [`Error::Bounds`].
    pub fn bounds(msg: impl Into<String>) -> Self {
        Error::Bounds(msg.into())
    }

    /// Convenience constructor for [`Error::Domain`].
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Convenience constructor for [`Error::Numeric`].
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Convenience constructor for [`Error::Config`].
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
