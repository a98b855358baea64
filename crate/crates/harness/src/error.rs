use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dataset line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("duplicate record id {id:?} (line {line})")]
    DuplicateId { id: String, line: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),

    #[error(transparent)]
    Core(#[from] tps_core::Error),

    #[error(transparent)]
    Backend(#[from] tps_backend::BackendError),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
