use thiserror::Error;

pub type Result<T> = std::result::Result<T, TtError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TtError {
    #[error("index {index} out of range for mode {mode} of size {size}")]
    IndexOutOfRange { mode: usize, index: usize, size: usize },

    #[error("expected {expected} indices, got {got}")]
    WrongArity { expected: usize, got: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dense size {requested} exceeds the limit of {limit} entries")]
    DenseLimit { requested: u128, limit: usize },

    #[error("split position {k} out of range for a {d}-dimensional tensor")]
    InvalidSplit { k: usize, d: usize },

    #[error("invalid ranks: {0}")]
    InvalidRanks(String),

    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("intersection matrix at separator {separator} is numerically singular")]
    SingularIntersection { separator: usize },

    #[error("cross intersection submatrix is numerically singular")]
    SingularSubmatrix,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("reference error is zero; the quasioptimality ratio is undefined")]
    ExactReference,

    #[error("parse error: {0}")]
    Parse(String),
}
