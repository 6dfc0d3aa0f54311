use std::fmt;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation was invoked in a state that cannot service it.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A byte string does not parse as the expected wire structure.
    /// Distinct from a verification returning `false`.
    #[error("decode error: {0}")]
    Decode(String),

    /// Symmetric decryption produced an invalid padding block.
    #[error("decryption failed: bad padding")]
    Decrypt,

    /// A scenario configuration field failed validation.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl fmt::Display, message: impl fmt::Display) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
