use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or coefficient violates a documented constraint.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("expression error at offset {offset}: {message}")]
    Expr { offset: usize, message: String },

    /// A quadrature did not reach its tolerance.
    #[error("quadrature for {integral} did not converge (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        integral: String,
        estimate: f64,
        error: f64,
    },

    /// Two numerical routes that must agree did not.
    #[error("numerical consistency failure: {0}")]
    Consistency(String),

    /// A non-finite state or value appeared during simulation.
    #[error("numerical failure at step {step}: {message}")]
    Numerical { step: usize, message: String },

    /// A hypothesis required by an operation was found violated on the probe grid.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
