use std::path::PathBuf;

/// Errors from file handling and the benchmark harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a finite number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: target column '{column}' {problem}")]
    TargetColumn {
        path: PathBuf,
        column: String,
        problem: &'static str,
    },
    #[error("unsupported model version '{found}', expected '{expected}'")]
    Version {
        found: String,
        expected: &'static str,
    },
    #[error("malformed model file: {0}")]
    ModelFormat(String),
    #[error("invalid benchmark config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] agb_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
