use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}: row {row}, column {column}: {message}")]
    Parse {
        file: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("views are not aligned: {0}")]
    Alignment(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("query syntax error at position {position}: {message}")]
    QuerySyntax { position: usize, message: String },

    #[error("query `{query}`: {message}")]
    Query { query: String, message: String },

    #[error("invalid redescription file: {0}")]
    Format(String),

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code for this error: 2 for configuration and input
    /// problems, 4 for filesystem failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}
