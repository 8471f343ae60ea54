use thiserror::Error;

/// Errors raised across the library.
///
/// Mathematical refutations (a certificate that fails, a probe that finds a
/// nonconvexity) are reported as data in the corresponding report types, not
/// through this enum. `NoCertificate` and `EmptyStarDifference` mean that a
/// sufficient condition could not be checked, not that it is false.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("invalid state space: {0}")]
    InvalidStates(String),

    #[error("invalid joint model at row {row}, column {col}: {reason}")]
    InvalidJoint {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("invalid joint model: {0}")]
    InvalidModel(String),

    #[error("invalid garbling: {0}")]
    InvalidGarbling(String),

    #[error("signal {0} has zero probability and carries no posterior")]
    ZeroMarginal(usize),

    #[error("priors differ by {gap:e} (tolerance {tol:e})")]
    PriorMismatch { gap: f64, tol: f64 },

    #[error("state spaces differ")]
    StateMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid payoff set: {0}")]
    InvalidPayoffSet(String),

    #[error("star-difference is empty; decomposition certificate does not apply")]
    EmptyStarDifference,

    #[error("first decision {a} lies outside [{lo}, {hi}]")]
    InfeasibleFirstDecision { a: f64, lo: f64, hi: f64 },

    #[error("domain violation for `{param}`: {reason}")]
    DomainViolation { param: String, reason: String },

    #[error("no first-order certificate: {0}")]
    NoCertificate(String),

    #[error("invalid solver configuration: {0}")]
    InvalidSolver(String),

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(param: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::DomainViolation {
            param: param.into(),
            reason: reason.into(),
        }
    }
}
