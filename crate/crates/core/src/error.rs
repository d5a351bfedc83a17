use thiserror::Error;

use crate::selection::SensorSet;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller violated a precondition (bad rank, index, dimensions, config).
    Precondition,
    /// A factorization or the greedy search broke down numerically.
    Numerical,
    /// Reading or writing a file failed, or a file was malformed.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank {rank} out of range for a {rows}x{cols} matrix (need 1 <= rank < {limit})", limit = rows.min(cols))]
    RankOutOfRange { rank: usize, rows: usize, cols: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("empty matrix ({rows}x{cols})")]
    Empty { rows: usize, cols: usize },
    #[error("index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("candidate {0} is already in the sensor set")]
    IndexCollision(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("noise covariance submatrix is singular")]
    SingularNoise,
    #[error("information matrix is singular or ill-conditioned")]
    SingularInformation,
    #[error("nonpositive Schur complement {gamma:e} for noise variance {variance:e}")]
    NonpositiveSchur { gamma: f64, variance: f64 },
    #[error("selection aborted at step {step}: no admissible candidate ({} selected so far)", partial.indices.len())]
    SelectionAborted { step: usize, partial: Box<SensorSet> },
    #[error("exhaustive search needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("every candidate was excluded")]
    AllCandidatesExcluded,
    #[error("requested {requested} snapshots but only {available} are available")]
    InsufficientSnapshots { requested: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed matrix file: {0}")]
    Format(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::SingularNoise
            | Error::SingularInformation
            | Error::NonpositiveSchur { .. }
            | Error::SelectionAborted { .. } => ErrorClass::Numerical,
            Error::Io(_) | Error::Format(_) => ErrorClass::Io,
            _ => ErrorClass::Precondition,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
