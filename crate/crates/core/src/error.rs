use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate postselection: overlap {overlap:e} is below threshold")]
    DegeneratePostselection { overlap: f64 },

    #[error("degenerate probe: every outcome has vanishing baseline probability")]
    DegenerateProbe,

    #[error("uninformative model: Fisher information {fisher:e} too small for a bias estimate")]
    UninformativeModel { fisher: f64 },

    #[error("uninformative probe basis: Fisher information {fisher:e} at g0 (choose theta away from 0)")]
    UninformativeBasis { fisher: f64 },

    #[error("support mismatch: outcome {outcome} has observed probability but none under the model")]
    SupportMismatch { outcome: usize },

    #[error("search interval [{lo:e}, {hi:e}] too small: likelihood maximum sits on its boundary")]
    SearchIntervalTooSmall { lo: f64, hi: f64 },

    #[error("malformed sweep table at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("bias routes disagree: relative-entropy route {entropy_route:e}, cross-term route {cross_route:e}")]
    RouteMismatch {
        entropy_route: f64,
        cross_route: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
