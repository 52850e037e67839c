use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the library.
///
/// [`Error::class`] maps each variant onto the coarse classes the CLI turns
/// into exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("kernel is singular on the diagonal (u = v = {0})")]
    Singular(f64),

    #[error(
        "regularity error: integrand Hölder order {beta} plus Hurst index {hurst} must exceed 1"
    )]
    Regularity { beta: f64, hurst: f64 },

    #[error("covariance matrix is not positive semidefinite (pivot {pivot:e} at index {index}, after regularization {regularized})")]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        regularized: bool,
    },

    #[error("circulant embedding is not nonnegative definite (min eigenvalue {min_eigenvalue:e})")]
    CirculantIndefinite { min_eigenvalue: f64 },

    #[error("{what}: dimension {size} exceeds budget {limit}")]
    Budget {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("grid is not uniform: {0}")]
    NonUniformGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("empty sample")]
    EmptySample,

    #[error("malformed input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    InputData,
    Internal,
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. }
            | Error::Domain(_)
            | Error::Regime(_)
            | Error::Overflow(_)
            | Error::Regularity { .. }
            | Error::Budget { .. } => ErrorClass::Config,
            Error::NonUniformGrid(_) | Error::Input(_) | Error::GridMismatch(_) => {
                ErrorClass::InputData
            }
            Error::Singular(_)
            | Error::NotPositiveDefinite { .. }
            | Error::CirculantIndefinite { .. }
            | Error::EmptySample
            | Error::Io(_) => ErrorClass::Internal,
        }
    }
}
