use std::path::PathBuf;

use dpsnn_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {key}: {reason}")]
    Config { key: String, reason: String },
    #[error(transparent)]
    Engine(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker {worker} panicked")]
    WorkerPanic { worker: u32 },
    #[error("determinism check failed: {0}")]
    Determinism(String),
}

impl HarnessError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Config { key: key.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit status: 1 configuration, 2 runtime, 3 determinism.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Engine(CoreError::InvalidConfig { .. }) => 1,
            HarnessError::Determinism(_) => 3,
            _ => 2,
        }
    }
}
