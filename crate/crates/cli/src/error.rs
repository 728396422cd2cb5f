use std::path::PathBuf;

use frac_wear::WearError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("invalid value `{value}` for `{key}`: {message}")]
    Value {
        key: String,
        value: String,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] WearError),
}

impl CliError {
    /// 2 for bad input, 1 for numerical or output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if !e.is_validation() => 1,
            CliError::Write { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn value(key: &str, value: &str, message: impl Into<String>) -> Self {
        CliError::Value {
            key: key.to_string(),
            value: value.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
