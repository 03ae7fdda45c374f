use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or invalid configuration (dimensions, rates, table entries).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix is too ill-conditioned for the requested solve.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// Scenario text could not be parsed or validated.
    #[error("line {line}: {key}: {message}")]
    Scenario {
        line: usize,
        key: String,
        message: String,
    },

    /// Malformed binary or text file.
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    /// A payload does not match the digest recorded in its manifest.
    #[error("hash mismatch for {path}: manifest {expected}, file {actual}")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
