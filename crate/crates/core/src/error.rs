//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A forecast case violated a structural invariant.
    #[error("invalid forecast case: {0}")]
    InvalidCase(String),

    /// A pre-rank vector violated a structural invariant.
    #[error("invalid pre-rank vector: {0}")]
    InvalidPreRank(String),

    /// Pre-rank vector length does not match the case's set size.
    #[error("pre-rank length {got} does not match set size {expected}")]
    PreRankLengthMismatch { got: usize, expected: usize },

    /// A rank fell outside the admissible range 1..=m.
    #[error("rank {rank} outside 1..={m}")]
    RankOutOfRange { rank: u32, m: usize },

    /// Summary statistics were requested from a histogram with no cases.
    #[error("histogram holds no cases")]
    EmptyHistogram,

    /// Too few points for a spanning-tree computation.
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    /// A scenario or model parameter is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Covariance factorization failed even after the jitter retry.
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    /// An error occurred while processing a specific case.
    #[error("case {index}: {source}")]
    Case {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    /// A forecast series violated a structural invariant.
    #[error("invalid forecast series: {0}")]
    InvalidSeries(String),

    /// Not enough preceding days to fit the training window.
    #[error("day index {day}: needs {window} preceding training days")]
    InsufficientHistory { day: usize, window: usize },

    /// ECC template and sample ensembles disagree in shape.
    #[error("ensemble shape mismatch: template {template} members, samples {samples}")]
    EnsembleShapeMismatch { template: usize, samples: usize },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the index of the case that produced it.
    pub fn for_case(self, index: u64) -> Error {
        Error::Case {
            index,
            source: Box::new(self),
        }
    }
}
