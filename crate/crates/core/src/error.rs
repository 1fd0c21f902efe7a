use thiserror::Error;

/// Errors raised by the escape rate engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {index} must be strictly positive, got {value}")]
    NonPositiveCoordinate { index: usize, value: f64 },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid action family: {0}")]
    InvalidFamily(String),

    #[error("{role} action index {index} out of range (have {len})")]
    ActionOutOfRange {
        role: &'static str,
        index: usize,
        len: usize,
    },

    #[error("node budget of {budget} visited nodes exhausted")]
    NodeBudgetExceeded { budget: u64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no witness found: {0}")]
    NoWitness(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
