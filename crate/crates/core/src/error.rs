use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
///
/// The variants are grouped so that front ends can map them onto a small
/// exit-code taxonomy (see [`Error::category`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid model: {reason} (offending ξ: {offending:?})")]
    InvalidModel { reason: String, offending: Vec<f64> },

    #[error("integrand not finite at ξ = {at} (value {value})")]
    NonFiniteIntegrand { at: f64, value: f64 },

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("classification inconclusive; enlarge cutoff schedule ({detail})")]
    Inconclusive { detail: String },

    #[error("truncation too small; enlarge grid ({detail})")]
    Truncation { detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Crank-Nicolson oscillation detected near t = 0 at x = {x}; use the rannacher scheme")]
    Oscillation { x: f64 },

    #[error("numerical abort: {0}")]
    Numerical(String),
}

/// Coarse grouping used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Inconclusive,
    Truncation,
    Numerical,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_)
            | Error::Domain(_)
            | Error::InvalidModel { .. }
            | Error::Precondition(_) => ErrorCategory::Config,
            Error::Inconclusive { .. } => ErrorCategory::Inconclusive,
            Error::Truncation { .. } => ErrorCategory::Truncation,
            Error::NonFiniteIntegrand { .. }
            | Error::SingularSystem { .. }
            | Error::Oscillation { .. }
            | Error::Numerical(_) => ErrorCategory::Numerical,
        }
    }
}
