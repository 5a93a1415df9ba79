use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate distance between {0:?} and {1:?}")]
    DegenerateDistance([f64; 3], [f64; 3]),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed action: {0}")]
    MalformedAction(String),

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("infeasible spawn after {0} retries")]
    InfeasibleSpawn(usize),

    #[error("insufficient data: need at least {needed} training pairs, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("kernel matrix is not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("estimator has not been fitted")]
    NotFitted,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
