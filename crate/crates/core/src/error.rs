use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("row {row} of the transition matrix sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("state ({position}, {velocity}) lies outside the tile-coding bounds")]
    OutOfBounds { position: f64, velocity: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("behavior policy assigns zero probability to {action:?}")]
    CoverageViolation { action: crate::env::Action },

    #[error("weights diverged at update {step}")]
    Diverged { step: u64 },

    #[error("transition matrix is not irreducible: {0}")]
    Reducible(String),

    #[error("I - P·Γ·Λ is singular; λ-return operator undefined")]
    DegenerateLambda,

    #[error("feature matrix does not have full column rank")]
    RankDeficient,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
