use thiserror::Error;

/// Errors raised by pattern construction, estimators, and simulators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite mark function value {value} for pair ({first}, {second})")]
    NonFinite {
        first: usize,
        second: usize,
        value: f64,
    },

    #[error("matrix is not positive definite: leading minor of order {order} fails")]
    NotPositiveDefinite { order: usize },

    #[error("unsupported specification: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
