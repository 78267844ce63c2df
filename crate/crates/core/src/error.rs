use thiserror::Error;

/// Errors raised across the crate. The variants map one-to-one onto the
/// process exit codes used by the `pdrls` binary.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration (bad parameters, malformed input).
    #[error("configuration error: {0}")]
    Config(String),

    /// A quantity requested outside the domain where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested computation exceeds a hard size bound.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Non-finite values or a linear solve that failed its residual check.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A Monte-Carlo moment oracle disagreed with the closed form.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Exit code convention: 2 config, 3 domain/resource/numeric, 4 validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 2,
            Error::Domain(_) | Error::Resource(_) | Error::Numeric(_) => 3,
            Error::Validation(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
