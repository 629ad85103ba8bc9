use std::path::{Path, PathBuf};

/// Errors of the command-line layer, each mapped to one exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(#[from] symtorus_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// 1 verification failure, 2 configuration or IO error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Verification(_) => 1,
            Self::Config(_) | Self::Io { .. } | Self::Format { .. } => 2,
            Self::Numerical(_) => 3,
        }
    }
}
