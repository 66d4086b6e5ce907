use thiserror::Error;

/// Which Kronecker factor an update refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    /// The p×p row factor.
    Row,
    /// The q×q column factor.
    Column,
}

impl std::fmt::Display for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Factor::Row => f.write_str("row (P)"),
            Factor::Column => f.write_str("column (Q)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (eigenvalue ratio {ratio:e})")]
    NotPositiveDefinite { ratio: f64 },

    /// An update right-hand side is (numerically) singular.
    #[error("rank-deficient {factor} update: smallest/largest eigenvalue ratio {ratio:e}")]
    RankDeficientUpdate { factor: Factor, ratio: f64 },

    /// Unconstrained estimator given too few or degenerate samples.
    #[error("rank-deficient data: {0}")]
    RankDeficient(String),

    #[error("sample {index} is the zero matrix")]
    ZeroSample { index: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no collinearity witness available")]
    MissingWitness,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
