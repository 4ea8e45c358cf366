use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A debias denominator `p - q` is zero (epsilon = 0 or equivalent).
    #[error("degenerate mechanism: {0}")]
    Degenerate(&'static str),

    #[error("stale bulletin: expected {expected} hot ids, got {got}")]
    StaleBulletin { expected: usize, got: usize },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("malformed frame: {0}")]
    Malformed(String),

    #[error("heavy part is empty")]
    EmptyStructure,

    #[error("light part has no candidate")]
    NoCandidate,

    #[error("enumeration too large: {0} cells")]
    EnumerationTooLarge(usize),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
