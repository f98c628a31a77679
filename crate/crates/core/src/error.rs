use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("group elements belong to different groups")]
    GroupMismatch,
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("unsupported discriminant {0}: only negative discriminants are handled")]
    Unsupported(i64),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("invalid form: {0}")]
    InvalidForm(String),
    #[error("{0} is not prime")]
    InvalidPrime(u64),
    #[error("{0} is inert, its prime ideal has no finite class data")]
    NoFiniteClass(u64),
    #[error("form ({0}, {1}, {2}) is not ambiguous")]
    NotAmbiguous(i64, i64, i64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("explicit factorization unavailable: {0}")]
    ExplicitUnavailable(String),
    #[error("no partition: {0}")]
    NoPartition(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
