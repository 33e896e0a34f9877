use std::path::{Path, PathBuf};

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] ccbond_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file exists but its contents are malformed.
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, message: impl ToString) -> Self {
        AppError::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Io { .. } => "io",
            AppError::Parse { .. } => "parse",
            AppError::Invalid(_) | AppError::Core(_) => "validation",
        }
    }

    /// Single-line JSON object for stderr.
    pub fn to_json_line(&self) -> String {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let AppError::Io { path, .. } | AppError::Parse { path, .. } = self {
            v["path"] = json!(path.display().to_string());
        }
        v.to_string()
    }
}
