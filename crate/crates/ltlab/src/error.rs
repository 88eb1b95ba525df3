//! Error types shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or grid specification.
    #[error("config: {0}")]
    Config(String),

    /// A numerical routine failed or was asked to operate outside its regime.
    #[error("numeric: {0}")]
    Numeric(String),

    /// File or serialization problem.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("io: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
