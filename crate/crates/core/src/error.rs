//! Crate-wide error type and its process exit-code mapping.

use std::fmt;

/// Everything that can go wrong across parsing, validation, analysis and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input document or mapping text (syntax, unknown names, bad values).
    Parse(String),
    /// A mapping that is syntactically fine but semantically invalid for its
    /// layer/architecture (factorization, fan-out, capacity, ...).
    InvalidMapping(Vec<String>),
    /// Two adjacent layers whose tensors cannot be chained even with symmetric
    /// zero padding.
    ChainMismatch(String),
    /// A configured resource cap was exceeded (table too large, retry ceiling, ...).
    ResourceCap(String),
    /// Filesystem trouble while reading inputs or writing reports.
    Io(String),
}

impl Error {
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub fn chain(msg: impl Into<String>) -> Self {
        Error::ChainMismatch(msg.into())
    }

    pub fn cap(msg: impl Into<String>) -> Self {
        Error::ResourceCap(msg.into())
    }

    /// Process exit code contract: 0 success, 2 parse error, 3 invalid
    /// mapping, 4 chain mismatch, 5 resource cap exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) => 2,
            Error::InvalidMapping(_) => 3,
            Error::ChainMismatch(_) => 4,
            Error::ResourceCap(_) => 5,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(m) => write!(f, "parse error: {m}"),
            Error::InvalidMapping(reasons) => {
                write!(f, "invalid mapping: {}", reasons.join("; "))
            }
            Error::ChainMismatch(m) => write!(f, "chain mismatch: {m}"),
            Error::ResourceCap(m) => write!(f, "resource cap exceeded: {m}"),
            Error::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
