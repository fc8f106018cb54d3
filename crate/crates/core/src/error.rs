use std::io;

use thiserror::Error;

/// Errors shared across corpus, vocabulary, embedding, model, and evaluation code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line counts differ: {source_lines} source lines vs {target_lines} target lines")]
    Alignment {
        source_lines: usize,
        target_lines: usize,
    },

    #[error("invalid UTF-8 in {name} on line {line}")]
    Utf8 { name: String, line: usize },

    #[error("parse error in {name} on line {line}: {message}")]
    Parse {
        name: String,
        line: usize,
        message: String,
    },

    #[error("word not in vocabulary: {0:?}")]
    UnknownWord(String),

    #[error("index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("{0}")]
    InvalidInput(String),

    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
