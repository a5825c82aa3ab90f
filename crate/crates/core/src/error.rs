use thiserror::Error;

/// Errors raised by the solver and its supporting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix: pivot {pivot:e} at row {row} is below threshold {threshold:e}")]
    Singular { row: usize, pivot: f64, threshold: f64 },

    #[error("non-finite value at time level {level} (tau = {tau}), node {node}")]
    NonFinite { level: usize, tau: f64, node: usize },

    #[error("time {t} is outside [0, {maturity}]")]
    OutOfRange { t: f64, maturity: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
