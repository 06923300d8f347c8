use thiserror::Error;

/// Errors raised by the phase-space engine, the closed forms and the Fock oracle.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergent Gaussian integral: smallest eigenvalue {min_eigenvalue:e} of Re(A) is below {threshold:e}")]
    DivergentIntegral { min_eigenvalue: f64, threshold: f64 },

    #[error("precision loss: {0}")]
    Precision(String),

    #[error(
        "invalid transform: constraint residual {residual:e} exceeds {tolerance:e} ({reason})"
    )]
    InvalidTransform {
        residual: f64,
        tolerance: f64,
        reason: &'static str,
    },

    #[error("Y- pole: e^epsilon * tanh(theta) = {product} is within 1e-10 of 1")]
    YMinusPole { product: f64 },

    #[error("insufficient Fock dimension: {0}")]
    InsufficientDimension(String),

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
