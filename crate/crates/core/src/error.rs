use thiserror::Error;

/// Errors raised by the library.
///
/// Variants fall into three families that the command-line front-end maps to
/// distinct exit codes: validation failures, unmet preconditions and resource
/// caps.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix data length {len} is not a square of a positive integer")]
    NotSquare { len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("trace is not 1 (got {0:.12})")]
    InvalidTrace(f64),

    #[error("not positive semi-definite (min eigenvalue {0:.3e})")]
    NegativeEigenvalue(f64),

    #[error("not a probability vector: {0}")]
    NotSimplex(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("resource cap exceeded: {what} = {requested} > {cap}")]
    Resource {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by a configured size cap.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
