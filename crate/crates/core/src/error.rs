use std::path::PathBuf;

use thiserror::Error;

use crate::classic::ClassicError;
use crate::eval::EvalError;
use crate::neural::NeuralError;
use crate::preprocess::PreprocessError;
use crate::tabular::TabularError;

/// Coarse failure class, mapped onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Classic(#[from] ClassicError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("unsupported schema_version {found} (supported: {supported})")]
    Version { found: u64, supported: u64 },
    #[error("missing input features: {}", .0.join(", "))]
    MissingFeatures(Vec<String>),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Tabular(e) => e.category(),
            Error::Preprocess(e) => e.category(),
            Error::Classic(e) => e.category(),
            Error::Neural(e) => e.category(),
            Error::Eval(e) => e.category(),
            Error::Config(_) | Error::Version { .. } => ErrorCategory::Config,
            Error::Format { .. } | Error::MissingFeatures(_) | Error::Io { .. } => {
                ErrorCategory::Data
            }
            Error::Fold { source, .. } | Error::Stage { source, .. } => source.category(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
