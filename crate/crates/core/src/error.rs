use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration violates a stated constraint.
    #[error("validation error: {0}")]
    Validation(String),

    /// A function was evaluated outside its domain (e.g. `t <= 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge ({context}): estimate {value}, error estimate {error_estimate:e} > tolerance {tolerance:e}")]
    Quadrature {
        context: String,
        value: f64,
        error_estimate: f64,
        tolerance: f64,
    },

    /// A boundary-matrix inversion hit a pole of the scattering matrix.
    #[error("spectral parameter {param} is at (or numerically near) a pole: condition number {condition:e}")]
    Pole { param: f64, condition: f64 },

    /// The requested S-matrix is genuinely complex, which the real API does not represent.
    #[error("S-matrix at energy {energy} is complex valued (max |Im| = {max_imag:e})")]
    ComplexValued { energy: f64, max_imag: f64 },

    #[error("i/o error: {1}")]
    Io(std::io::ErrorKind, String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.kind(), e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
