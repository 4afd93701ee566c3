//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration supplied by the caller (bad flag values,
    /// dimension ranges violating the half-box rule, inconsistent shapes).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A dataset or result record failed to parse. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An instance violates the size constraints against its box.
    #[error("invalid instance: {0}")]
    Instance(String),

    /// Checkpoint file is missing, malformed, or from an incompatible version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Training aborted (non-finite loss or gradient).
    #[error("training aborted: {0}")]
    Training(String),

    /// A caller broke an API precondition; indicates a bug, not bad data.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
