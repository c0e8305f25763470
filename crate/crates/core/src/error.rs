use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Structural problems: shape mismatches, bad argument ranges.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input data failed ingestion validation (NaN/Inf, ragged rows, parse errors).
    #[error("data error: {0}")]
    Data(String),

    /// A numerical routine failed to produce a usable result.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Model (de)serialization problems.
    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
