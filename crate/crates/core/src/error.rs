use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value outside its register width or documented range.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what} index {value} out of range (max {max})")]
    Index {
        what: &'static str,
        value: usize,
        max: usize,
    },

    /// A packet that does not decode under the wire format.
    #[error("protocol error: {reason} (header {header:#06x})")]
    Protocol { header: u16, reason: &'static str },

    #[error("unmapped configuration address {0:#05x}")]
    UnmappedAddress(u16),

    #[error("FIFO overflow (capacity {capacity})")]
    FifoOverflow { capacity: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
