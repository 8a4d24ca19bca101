//! Crate-wide error type.

use thiserror::Error;

use crate::consts::MAX_DIM;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("dimension {0} outside 1..={MAX_DIM}")]
    DimOutOfRange(usize),

    #[error("element {bits:#b} does not fit in dimension {dim}")]
    ElementOutOfRange { bits: u32, dim: usize },

    #[error("set is empty")]
    EmptySet,

    #[error("conditional family is empty")]
    EmptyFamily,

    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("descent stalled at iteration {iteration} with d = {d} bits")]
    NoProgress { iteration: usize, d: f64 },

    #[error("descent hit the iteration cap {max_iters} with d = {d} bits")]
    IterationCap { max_iters: usize, d: f64 },

    #[error("final iterate is not uniform on a coset (off by {distance} bits)")]
    NotCosetUniform { distance: f64 },

    #[error("certificate failed: {0}")]
    CertificateFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimMismatch(a, b))
    }
}

pub(crate) fn check_dim_range(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::DimOutOfRange(dim))
    }
}
