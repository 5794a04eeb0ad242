use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("mismatched carriers: {0}")]
    Mismatch(String),
    /// A structural property failed; the witness names where.
    #[error("{what}: {witness}")]
    Violation { what: String, witness: String },
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn violation(what: impl Into<String>, witness: impl Into<String>) -> Error {
        Error::Violation {
            what: what.into(),
            witness: witness.into(),
        }
    }
}
