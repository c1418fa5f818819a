use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("lex error at {line}:{col}: {message}")]
    Lex { line: u32, col: u32, message: String },

    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },

    #[error("parse error in {source_name} at line {line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("project at {0} contains no parseable source files")]
    EmptyProject(PathBuf),

    #[error("task selection is empty: {0}")]
    EmptyTask(String),

    #[error("call graph has no edges to classify")]
    EmptyDistribution,

    #[error("missing artifact {path}: run `{producer}` first")]
    MissingArtifact { path: PathBuf, producer: String },

    #[error("project `{0}` is already in the workspace (use --replace)")]
    Duplicate(String),

    #[error("sample {0} is already context-augmented")]
    AlreadyAugmented(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(source_name: impl Into<String>, err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: err.to_string(),
        }
    }

    /// True for errors caused by bad input (as opposed to internal faults).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Json(_))
    }
}
