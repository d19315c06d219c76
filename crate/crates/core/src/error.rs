use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file. `row` is the 1-based data row, when known.
    #[error("{}: {message}{}", path.display(), row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    Schema {
        path: PathBuf,
        row: Option<usize>,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("degenerate feature `{0}`: zero variance")]
    DegenerateFeature(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("label error: {0}")]
    Label(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("weight error: {0}")]
    Weight(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("size error: requested {requested}, available {available}")]
    Size { requested: usize, available: usize },

    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, row: Option<usize>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            row,
            message: message.into(),
        }
    }
}
