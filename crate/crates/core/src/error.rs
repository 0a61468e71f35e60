//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Matrix or vector dimensions are inconsistent with the system config.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The Fisher information matrix is singular; the requested bound is undefined.
    #[error("singular Fisher information: {0}")]
    SingularFim(String),

    /// The optimization problem has no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Experiment configuration could not be parsed or resolved.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
