use std::path::PathBuf;

use num_bigint::BigInt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{a} has no inverse modulo {p}")]
    NoInverse { a: BigInt, p: BigInt },

    /// The inputs are well-formed but the requested operation does not apply to them.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("checkpoint {path} does not match this run: {reason}")]
    CheckpointMismatch { path: PathBuf, reason: String },

    #[error("checkpoint i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Two independent computations disagreed. Always a bug.
    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NoInverse { .. } => "no_inverse",
            Error::Precondition(_) => "precondition",
            Error::CheckpointMismatch { .. } => "checkpoint_mismatch",
            Error::Io { .. } => "io",
            Error::Consistency(_) => "consistency",
        }
    }
}
