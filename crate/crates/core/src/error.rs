use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A system parameter set violates a structural constraint.
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    /// Two objects that must agree in size do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An argument is outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A channel name or model is not in the catalog.
    #[error("unknown channel: {0}")]
    UnknownChannel(String),
    /// A text file or config could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
