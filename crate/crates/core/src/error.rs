use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the table builders and analyses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("series is not normalized: a(1) = {0}, expected 1")]
    NotNormalized(String),

    #[error("Deligne bound violated at p = {p}: |lambda(p)| = {value} > 2")]
    DeligneViolation { p: u64, value: f64 },

    #[error("Hecke relations fail: {0}")]
    HeckeVerification(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("outside the theorem's hypotheses: {0}")]
    OutOfScope(String),

    #[error("resource limit: {needed} bytes requested, cap is {cap} bytes")]
    Resource { needed: u64, cap: u64 },

    #[error("L-function has a pole at s = 1: {0}")]
    PoleAtOne(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("cache mismatch: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
