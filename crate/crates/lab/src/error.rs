use coco_core::CocoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Scenario(#[source] CocoError),
    #[error("numerical failure in round {round}: {source}")]
    Numerical {
        round: usize,
        #[source]
        source: CocoError,
    },
    #[error("numerical failure: {0}")]
    Evaluation(#[source] CocoError),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// 2 for anything the user can fix in the config or environment, 3 for numerics.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Numerical { .. } | LabError::Evaluation(_) | LabError::Verify(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
