use thiserror::Error;

/// Errors raised when inputs violate a precondition of the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{what} {value} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("probability {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("movement model {model} is not defined on a {topology} grid")]
    ModelGridMismatch {
        model: &'static str,
        topology: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("row {row} is not stochastic: {reason}")]
    NotStochastic { row: usize, reason: String },

    #[error("initial direction {0}")]
    InitialDirection(&'static str),

    #[error("target fraction {0} must lie in (0, 1]")]
    InvalidTarget(f64),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("uniform baseline did not reach the target within {0} steps")]
    BaselineTruncated(usize),

    #[error("no cross-over in range: {0}")]
    NoCrossover(String),

    #[error("ambiguous cross-over: {0}")]
    AmbiguousCrossover(String),
}

pub type Result<T> = std::result::Result<T, Error>;
