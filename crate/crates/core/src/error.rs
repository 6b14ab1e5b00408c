use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge ({what}): estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    NonConvergence {
        what: String,
        estimate: f64,
        tolerance: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("validation error: {0}")]
    Validation(String),

    /// Pairing enumeration would exceed the configured word length.
    #[error("word of length {len} exceeds the maximum {max} for pairing enumeration")]
    Complexity { len: usize, max: usize },

    #[error("resource limit: {what} needs dimension {dim}, limit is {limit}")]
    Resource {
        what: String,
        dim: usize,
        limit: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Validation(_) | Error::Domain(_) => 2,
            Error::Io(_) | Error::Json(_) => 2,
            _ => 3,
        }
    }
}
