use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants are grouped the way the command line tool reports them: input
/// and domain problems, numerical breakdowns, and violated preconditions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("singular profile at x = {x:.6}: psi = {psi:e}")]
    SingularProfile { x: f64, psi: f64 },

    #[error("invalid initial family: {0}")]
    InvalidFamily(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("stencil needs at least {needed} samples, got {got}")]
    Stencil { needed: usize, got: usize },

    #[error("quadrature truncation too large: tail fraction {tail:e} exceeds {tol:e} for k_max = {k_max}")]
    Truncation { tail: f64, tol: f64, k_max: usize },

    #[error("integrand has a pole: {0}")]
    Pole(String),

    #[error("outside the parabolic regime: {0}")]
    OutOfRegime(String),

    #[error("time derivative unreliable: {0}")]
    TimeStep(String),

    #[error("no dominant mode detected: {0}")]
    NoMode(String),

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("cannot invert cap: {0}")]
    NonMonotone(String),

    #[error("rejected parameters: {0}")]
    Rejected(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Broad category used to pick process exit codes.
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            Parse { .. } | Io(_) => ErrorCategory::Config,
            SingularProfile { .. } | Integration(_) | Truncation { .. } | Pole(_) | TimeStep(_) => {
                ErrorCategory::Numerical
            }
            _ => ErrorCategory::Precondition,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numerical,
    Precondition,
}

pub type Result<T> = std::result::Result<T, Error>;
