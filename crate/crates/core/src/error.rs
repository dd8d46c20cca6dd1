use std::io;

use thiserror::Error;

/// Errors surfaced by the library. The CLI maps each variant to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("item {item} at line {line} is outside the universe of {n_items} items")]
    ItemRange { line: usize, item: u64, n_items: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("statistics are undefined for an empty database")]
    EmptyDb,

    #[error("estimator is ill-conditioned: |2p-1| = {0} is below the tolerance")]
    IllConditioned(f64),

    #[error("itemset of size {k} exceeds the estimator limit k_max = {k_max}")]
    ItemsetTooLarge { k: usize, k_max: usize },

    #[error("provenance sidecar required but not present")]
    MissingProvenance,
}

pub type Result<T> = std::result::Result<T, Error>;
