use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A spectral density was requested at a point where it is not defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data set is too short for the requested procedure.
    #[error("sample too small: {0}")]
    SampleTooSmall(String),

    /// A quantity that must be strictly positive (a determinant, a
    /// variance denominator) vanished.
    #[error("degenerate problem: {0}")]
    Degenerate(String),

    /// Numerical failure (non positive-definite covariance, failed embedding).
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
