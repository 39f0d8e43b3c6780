//! Error type shared across the crate.

use thiserror::Error;

/// Failure modes of the estimation pipeline.
///
/// `InvalidInput` means the caller broke a precondition and the call could
/// not start; `Estimation` means the inputs were well formed but the data
/// did not support an estimate (for example no pairs at any scale).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("malformed point data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
