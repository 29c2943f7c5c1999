use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("target {target} out of range for {classes} classes")]
    Target { target: usize, classes: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("token id {id} outside vocabulary of size {size}")]
    Vocabulary { id: usize, size: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("metrics undefined: {0}")]
    Metrics(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Dimension {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}
