use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?} ({context})")]
    Shape {
        left: Vec<usize>,
        right: Vec<usize>,
        context: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    /// A non-finite value showed up during a forward or backward pass.
    #[error("numeric failure in {what} at step {step}")]
    Numeric { what: String, step: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("validation failed for {item}: {reason}")]
    Validation { item: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(left: &[usize], right: &[usize], context: &'static str) -> Self {
        Error::Shape {
            left: left.to_vec(),
            right: right.to_vec(),
            context,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn validation(item: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            item: item.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn numeric(what: impl Into<String>, step: usize) -> Self {
        Error::Numeric {
            what: what.into(),
            step,
        }
    }
}
