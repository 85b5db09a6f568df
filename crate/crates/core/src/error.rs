use thiserror::Error;

/// Errors raised by the model and filter layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("query time {t} outside the blend window [{start}, {end})")]
    OutsideWindow { t: f64, start: f64, end: f64 },

    #[error("degenerate filter: epsilon = {epsilon} (input gain and barrier value both vanish)")]
    DegenerateFilter { epsilon: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("snapshot parse error at line {line}: {message}")]
    Snapshot { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
