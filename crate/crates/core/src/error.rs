use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("policy (λ={lambda}, θ={theta}) not admissible: {reason}")]
    PolicyDomain {
        lambda: f64,
        theta: f64,
        reason: &'static str,
    },

    #[error("state collapsed to (0, 0) at step {step}")]
    StateCollapse { step: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("no convergence after {iterations} iterations (last value {last})")]
    NotConverged {
        iterations: u64,
        last: f64,
        trailing: Vec<f64>,
    },

    #[error("operation requires a stream with bounded support")]
    UnboundedSupport,

    #[error("operation requires a finite-support stream")]
    NeedsFiniteSupport,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
