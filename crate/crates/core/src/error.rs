use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure in {what} (residual {residual:e})")]
    NumericalFailure { what: String, residual: f64 },

    /// Argument outside the domain of a map, e.g. a non-positive eigenvalue
    /// passed to a matrix logarithm. `value` is the offending quantity.
    #[error("domain error in {what}: {value:e}")]
    Domain { what: String, value: f64 },

    #[error("invalid composition at {boundary}: {left} != {right}")]
    InvalidComposition {
        boundary: String,
        left: usize,
        right: usize,
    },

    #[error("rejected activation: {0}")]
    RejectedActivation(String),

    #[error("random layer stayed rank deficient after {retries} retries (smallest singular value {lambda_star:e})")]
    RankFailure { lambda_star: f64, retries: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("non-finite loss at batch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("training diverged at epoch {epoch} (loss {loss:e})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
