use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid {field}: {constraint}")]
    Validation { field: String, constraint: String },

    #[error(transparent)]
    Model(#[from] cascade_droop::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("refusing to write an empty trace")]
    EmptyTrace,

    #[error("unknown case {0} (expected 1..=5)")]
    UnknownCase(usize),

    #[error("case {case}: {source}")]
    Case {
        case: usize,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    /// Process exit code: 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::UnknownCase(_) => 1,
            CliError::Model(e) if matches!(e.root(), cascade_droop::Error::Invalid { .. }) => 1,
            CliError::Model(_) | CliError::Io { .. } | CliError::EmptyTrace => 2,
            CliError::Case { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
