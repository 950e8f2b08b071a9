//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WgError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh topology error on element {element}: {message}")]
    Topology { element: usize, message: String },

    #[error("unsupported quadrature degree {0}")]
    UnsupportedQuadrature(usize),

    #[error("quadrature rule of degree {got} is below the required degree {need}")]
    InsufficientQuadrature { got: usize, need: usize },

    #[error("singular mass matrix ({context})")]
    SingularMass { context: String },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("conjugate gradient breakdown: matrix is not positive definite ({0})")]
    IndefiniteSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, WgError>;
