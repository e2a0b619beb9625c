use std::path::PathBuf;

use crate::sel::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Strict-mode grammar violation; carries the first offending position.
    #[error("SEL syntax error: {0}")]
    Syntax(Diagnostic),

    #[error("invalid label {label:?}: {reason}")]
    InvalidLabel { label: String, reason: &'static str },

    #[error("invalid span {span:?}: {reason}")]
    InvalidSpan { span: String, reason: &'static str },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Located {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("gold and prediction corpora differ in length ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("{0} stream exhausted")]
    StreamExhausted(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a file name to a line-level error.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Format { line, message } => Error::Located {
                path: path.into(),
                line,
                message,
            },
            other => other,
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
