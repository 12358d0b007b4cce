//! Error type shared across the crate.
//!
//! Variants are grouped by how a caller should react: configuration errors
//! mean the request itself was malformed, numeric errors mean a computation
//! left its valid regime, and I/O errors wrap filesystem failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is out of range or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A computation produced or detected invalid numbers (NaN, resonance,
    /// divergence, failed factorization).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Filesystem failure while reading or writing an artifact.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A file exists but its contents do not match the expected format.
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
