//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type. Degeneracy, genericity and alignment failures are
/// separate variants because callers branch on them (redraw policies, tests).
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A contraction lost a component (rank drop, complex eigenvalues, ...).
    #[error("degenerate contraction: {0}")]
    Degeneracy(String),

    /// Pairing eigenvalues too close to order the factor columns reliably.
    #[error("genericity violated: {0}")]
    Genericity(String),

    #[error("factor alignment failed: {0}")]
    Alignment(String),

    #[error("rank-deficient linear system: {0}")]
    RankDeficient(String),

    /// A nuclear-norm subproblem failed to reach feasibility.
    #[error("recovery failed: {0}")]
    RecoveryFailed(String),

    #[error("decomposition failed: {0}")]
    DecompositionFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
