//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters outside their documented domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// Terrain definition or terrain/grid interaction problem.
    #[error("terrain error: {0}")]
    Terrain(String),

    /// Non-finite field values detected while marching.
    #[error("numerical failure at range step {step}: {detail}")]
    Numerics { step: usize, detail: String },

    /// Regression matrix does not have full column rank.
    #[error("rank-deficient regression matrix: {deficient} of {total} columns linearly dependent")]
    RankDeficient { deficient: usize, total: usize },

    /// A hat-matrix diagonal reached 1; leave-one-out residuals are undefined.
    #[error("ill-posed leave-one-out: leverage {leverage} at sample {sample}")]
    IllPosedLoo { sample: usize, leverage: f64 },

    /// The adaptive extension ran out of candidate indices.
    #[error("basis extension exhausted: candidate set is empty")]
    BasisExhausted,

    /// Malformed file content (CSV, model text format, ...).
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn terrain(msg: impl Into<String>) -> Self {
        Error::Terrain(msg.into())
    }
}
