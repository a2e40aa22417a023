use thiserror::Error;

/// Errors raised by the estimator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the unit cube [0,1]^{dim}")]
    OutOfDomain { point: Vec<f64>, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("response {y} at sample {index} exceeds the bound A = {bound}")]
    ResponseOutOfBounds { index: usize, y: f64, bound: f64 },

    #[error("family size overflows: {0}")]
    SizeOverflow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown problem preset `{0}`")]
    UnknownPreset(String),

    #[error("enumeration needs {terms} terms, budget is {budget}")]
    BudgetExceeded { terms: f64, budget: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
