use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SccaError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("grid mismatch: sample has {sample} points, basis has {basis}")]
    GridMismatch { sample: usize, basis: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A projection has zero scale; the objective treats this as zero association.
    #[error("degenerate margin")]
    DegenerateMargin,

    #[error("penalized covariance block is singular; increase tau or decrease d")]
    SingularBlock,

    #[error("no nondegenerate projection found in any restart")]
    NoNondegenerateProjection,

    #[error("model inconsistent: {0}")]
    InconsistentModel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, SccaError>;
