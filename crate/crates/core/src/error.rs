use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tensor is not invertible: level-0 coefficient is {0}, expected 1")]
    NotGroupLike(f64),

    #[error("time interval [{s}, {t}] lies outside the path domain [{start}, {end}]")]
    OutOfDomain { s: f64, t: f64, start: f64, end: f64 },

    #[error("covariance matrix is not positive definite even after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("series did not reach its ratio-test cutoff within {kmax} terms; increase the summation cap")]
    SeriesCap { kmax: usize },

    #[error("step size underflow at t = {t}: trajectory likely escaped (last valid state at t = {t})")]
    StepUnderflow { t: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
