use std::path::{Path, PathBuf};

use ibvs_core::error::{AnalysisError, ScenarioError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}parse error at `{key}` (line {line}, column {column}): {message}", file.as_ref().map(|f| format!("{}: ", f.display())).unwrap_or_default())]
    Parse { file: Option<PathBuf>, key: String, line: usize, column: usize, message: String },
    #[error("{}log line {line}: {message}", file.as_ref().map(|f| format!("{}: ", f.display())).unwrap_or_default())]
    Log { file: Option<PathBuf>, line: usize, message: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl SimError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        SimError::Io { path: path.to_path_buf(), source }
    }

    pub fn in_file(self, path: &Path) -> Self {
        match self {
            SimError::Parse { key, line, column, message, .. } => {
                SimError::Parse { file: Some(path.to_path_buf()), key, line, column, message }
            }
            SimError::Log { line, message, .. } => SimError::Log { file: Some(path.to_path_buf()), line, message },
            other => other,
        }
    }
}
