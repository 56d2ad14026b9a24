use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum FgplError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FgplError {
    pub fn validation(msg: impl Into<String>) -> Self {
        FgplError::Validation(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        FgplError::Parse {
            line,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FgplError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            FgplError::Validation(_) => "validation",
            FgplError::Parse { .. } => "parse",
            FgplError::Config(_) => "config",
            FgplError::Domain(_) => "domain",
            FgplError::Numeric(_) => "numeric",
            FgplError::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, FgplError>;
