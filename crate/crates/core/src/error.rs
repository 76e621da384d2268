//! Error type shared across the crate.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// An operation that needs at least one element was given none.
    EmptyInput,
    /// Two sketches cannot be combined or compared (different length or seed).
    IncompatibleSketches(String),
    /// Parameters violate their constraints (for example `j2 >= j1`).
    InvalidParameters(String),
    /// The same set id was inserted twice into an index.
    DuplicateId(String),
    /// A serialized artifact is corrupt; `offset` is the byte position where
    /// decoding failed.
    Format { offset: u64, message: String },
    /// An I/O error while writing an artifact.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput => write!(f, "input set is empty"),
            Error::IncompatibleSketches(why) => write!(f, "incompatible sketches: {why}"),
            Error::InvalidParameters(why) => write!(f, "invalid parameters: {why}"),
            Error::DuplicateId(id) => write!(f, "duplicate set id: {id}"),
            Error::Format { offset, message } => {
                write!(f, "format error at byte {offset}: {message}")
            }
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
