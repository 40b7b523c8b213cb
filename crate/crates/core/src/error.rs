use thiserror::Error;

/// Errors raised by the geometry, rational, potential and solver layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Malformed input: bad literal, wrong list length, violated precondition on shapes.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A point lies where the operation is undefined (on the set, at a pole, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method stopped before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (last defect {defect:e}): {context}")]
    NonConvergence {
        iterations: usize,
        defect: f64,
        context: String,
    },

    /// A linear system or quadrature rule failed numerically.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A computed object violates a structural property it must satisfy.
    #[error("integrity error: {0}")]
    Integrity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
