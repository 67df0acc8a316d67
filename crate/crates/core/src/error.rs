use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("insufficient data: {0}")]
    Length(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("columns are not centered: column {column} has mean {mean:e}")]
    NotCentered { column: usize, mean: f64 },
    #[error("matrix is singular or rank deficient: {0}")]
    Singular(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("duplicate observation for ({country}, {year})")]
    Duplicate { country: String, year: i32 },
}

pub type Result<T> = core::result::Result<T, Error>;
