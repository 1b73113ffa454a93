use thiserror::Error;

/// Errors produced by estimation, target construction and the evaluation protocols.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} is not strictly positive)")]
    NotPositiveDefinite { pivot: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("symmetric eigenvalue iteration did not converge")]
    ConvergenceFailure,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("posterior table inconsistent with inputs: {0}")]
    InconsistentTable(String),

    #[error("PRIAL denominator is zero: the sample covariance equals the truth in every repetition")]
    DegenerateDenominator,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("repetition {repetition} (seed {seed}) failed: {source}")]
    Repetition {
        seed: u64,
        repetition: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
