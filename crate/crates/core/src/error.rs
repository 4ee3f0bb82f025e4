use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("operator is not positive semidefinite (lambda_min = {lambda_min:.3e}, lambda_max = {lambda_max:.3e})")]
    NotPsd { lambda_min: f64, lambda_max: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("matrix does not have full row rank")]
    RankDeficient,

    #[error("constraint set is empty: {0}")]
    InfeasibleSet(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        /// Best available iterate when the iteration limit was hit.
        best: Vec<f64>,
    },

    #[error("multiplier bracket expansion failed: {0}")]
    BracketFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameter condition violated: {0}")]
    ParameterCondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trace too short: need {needed} usable iterations, have {available}")]
    InsufficientTrace { needed: usize, available: usize },

    #[error("no known saddle point for this problem")]
    MissingSaddle,

    #[error("initial point is zero; relative error undefined")]
    ZeroInitialPoint,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
