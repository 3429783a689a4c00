use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("kronecker product would store {entries} entries (cap {cap})")]
    KroneckerCap { entries: usize, cap: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last})")]
    NotConverged { iterations: usize, last: f64 },

    #[error("no dominant eigenvalue: power iteration oscillates (last estimate {last})")]
    NoDominantEigenvalue { last: f64 },

    #[error("matrix is not symmetric positive definite (eigenvalue {eigenvalue})")]
    NotSpd { eigenvalue: f64 },

    #[error("problem too large: {what} has {size} unknowns (cap {cap})")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("unreliable estimate: {0}")]
    Unreliable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
