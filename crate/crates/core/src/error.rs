use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input")]
    NonFinite,

    #[error("incompatible polarizer: {0}")]
    IncompatiblePolarizer(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("lambda out of range: {lambda} not in [{lo}, {hi}]")]
    LambdaOutOfRange { lambda: f64, lo: f64, hi: f64 },

    #[error("grid not strictly increasing")]
    GridNotIncreasing,

    #[error("no negative-energy endpoint found within {attempts} scalings")]
    NoNegativeEndpoint { attempts: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("endpoint constraint violated: {0}")]
    EndpointViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
