use std::path::Path;

/// Everything that can stop a command, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gwrk_core::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Assertion(String),
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Core(_) | Self::Invalid(_) | Self::Io { .. } => 2,
            Self::Assertion(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Core(gwrk_core::Error::ResourceLimit { .. }) => "resource",
            Self::Core(_) | Self::Invalid(_) => "validation",
            Self::Io { .. } => "io",
            Self::Assertion(_) => "assertion",
        }
    }

    /// `gwrk: error[<kind>]: <reason>` on a single line.
    pub fn one_line(&self) -> String {
        let reason = self.to_string().replace(['\n', '\r'], " ");
        format!("gwrk: error[{}]: {}", self.kind(), reason.trim())
    }
}

pub type CliResult<T> = Result<T, CliError>;
