use thiserror::Error;

use crate::kernel::ChainTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("series evaluation did not converge: {0}")]
    Convergence(String),

    #[error("rejection sampler exceeded {attempts} attempts ({context})")]
    RejectionCap { attempts: usize, context: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("kernel is reducible: {0}")]
    Reducible(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("chain aborted at iteration {iteration} after {} recorded draws: {source}", partial.len())]
    ChainAborted {
        iteration: usize,
        partial: Box<ChainTrace>,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// The innermost error, looking through chain aborts.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::ChainAborted { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
