use std::io;
use std::path::{Path, PathBuf};

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{stage}: {source}")]
    Core { stage: String, source: clat_core::Error },
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn context(self, path: &Path) -> Self {
        match self {
            CliError::Format(m) => CliError::Format(format!("{}: {m}", path.display())),
            other => other,
        }
    }

    /// 2 usage, 3 data or format, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Format(_) | CliError::Io { .. } => 3,
            CliError::Core { source, .. } if source.is_numeric() => 4,
            CliError::Core { .. } => 3,
        }
    }
}

impl From<clat_core::Error> for CliError {
    fn from(source: clat_core::Error) -> Self {
        CliError::Core {
            stage: "error".into(),
            source,
        }
    }
}

pub trait Stage<T> {
    /// Names the pipeline stage in a core error.
    fn stage(self, stage: &str) -> CliResult<T>;
}

impl<T> Stage<T> for Result<T, clat_core::Error> {
    fn stage(self, stage: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            stage: stage.to_string(),
            source,
        })
    }
}
