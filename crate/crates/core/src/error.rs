use thiserror::Error;

/// Errors produced by estimation, tuning and I/O routines.
#[derive(Debug, Error)]
pub enum EviError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty tail sample: no response exceeds the threshold")]
    EmptyTail,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("non-finite intermediate at boosting iteration {iteration}: {what}")]
    NonFiniteAtIteration { iteration: usize, what: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("TIR fit did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    TirNonConvergence {
        iterations: usize,
        grad_norm: f64,
        theta: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EviError {
    /// Process exit status: 1 I/O, 2 bad input, 3 infeasible, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            EviError::Io(_) => 1,
            EviError::Parse(_) | EviError::Domain(_) | EviError::DimensionMismatch { .. } | EviError::InvalidConfig(_) => 2,
            EviError::EmptyTail | EviError::Infeasible(_) => 3,
            EviError::NonFinite(_) | EviError::NonFiniteAtIteration { .. } | EviError::TirNonConvergence { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, EviError>;
