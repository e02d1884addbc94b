use thiserror::Error;

/// Errors raised anywhere in the simulation stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Fock truncation {0}: need at least 2 levels")]
    InvalidTruncation(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("divergent expression: {0}")]
    Divergence(String),

    #[error("solver failure after {steps} steps at t = {time:e}: {reason}")]
    Solver {
        reason: String,
        steps: usize,
        time: f64,
    },

    #[error("computation exceeded its deadline")]
    Timeout,

    #[error("steady state is not unique: {0}")]
    Degenerate(String),

    #[error("correlation window too short: tail amplitude {tail:e} exceeds {limit:e} of peak")]
    WindowTooShort { tail: f64, limit: f64 },

    #[error("ambiguous peak: {0}")]
    AmbiguousPeak(String),

    #[error("shift is not monotonic in the coupling: {0}")]
    NonMonotonic(String),

    #[error("eigenstate labeling failed: {0}")]
    Labeling(String),

    #[error("not converged in Fock truncation: {0}")]
    NotConverged(String),

    #[error("numerical integrity violated: {0}")]
    NumericalIntegrity(String),

    #[error("finite-difference stencil crosses a level crossing at B = {field} T")]
    Stencil { field: f64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("query {x:e} outside profile range [{min:e}, {max:e}]")]
    OutOfRange { x: f64, min: f64, max: f64 },

    #[error("I/O error on {path}: {reason}")]
    Io { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
