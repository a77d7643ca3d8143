use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not positive definite: non-positive pivot at step {0}")]
    NotPositiveDefinite(usize),

    #[error("zero pivot at step {0}")]
    ZeroPivot(usize),

    #[error("index {index} out of range for dimension {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("invalid hyper-parameter: {0}")]
    InvalidHyperparameter(String),

    #[error("{0} is not a perfect square")]
    NotPerfectSquare(usize),

    #[error("invalid overlap fraction {0}; expected 0 <= f < 0.5")]
    InvalidOverlap(f64),

    #[error("cannot split {p} indices into {k} blocks")]
    TooManyBlocks { p: usize, k: usize },

    #[error("indices not covered by any set: {0:?}")]
    UncoveredIndices(Vec<usize>),

    #[error("set {set} contains index {index} more than once")]
    DuplicateWithinSet { set: usize, index: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix of order {p} exceeds the limit of {limit}")]
    TooLarge { p: usize, limit: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch(expected: (usize, usize), found: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        expected: format!("{}x{}", expected.0, expected.1),
        found: format!("{}x{}", found.0, found.1),
    }
}
