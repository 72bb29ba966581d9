use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations (last iterates: {trace:?})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        trace: Vec<f64>,
    },

    #[error("theorem case mismatch: {0}")]
    CaseMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
