use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed line at line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("label out of range at line {line}: {label} (n_classes = {n_classes})")]
    LabelOutOfRange {
        line: usize,
        label: i64,
        n_classes: usize,
    },

    #[error("missing TAB separator at line {line}")]
    MissingTab { line: usize },

    #[error("unknown dataset {name:?}; valid names: {valid}")]
    UnknownDataset { name: String, valid: String },

    #[error("class index {index} out of range for {n_classes} classes")]
    ClassOutOfRange { index: usize, n_classes: usize },

    #[error("invalid label vector: {0}")]
    InvalidLabel(String),

    #[error("corpus too small: {0}")]
    CorpusTooSmall(String),

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },

    #[error("label width {found} does not match model n_classes {expected}")]
    LabelWidth { expected: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
