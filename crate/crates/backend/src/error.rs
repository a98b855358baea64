use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    /// Network-level failure (connect, timeout, 5xx). Retryable.
    #[error("transport failure: {0}")]
    Transport(String),

    /// Definitive HTTP rejection (4xx). Not retryable.
    #[error("backend rejected the request: status {status}: {message}")]
    Rejected { status: u16, message: String },

    #[error("backend response is malformed: {0}")]
    Protocol(String),

    #[error("backend does not support scoring a supplied continuation")]
    ScoringUnsupported,

    #[error("could not tokenize continuation {answer:?}: {reason}")]
    Tokenization { answer: String, reason: String },

    #[error("no fixture entry for request {key}")]
    MissingFixtureEntry { key: String },

    #[error("fixture entry {key} does not hash to its own request")]
    CorruptFixtureEntry { key: String },

    #[error("cover probabilities sum to {total}, exceeding 1 (+1e-6); the answer set is not prefix-free or the backend is inconsistent")]
    CoverMassExceeded { total: f64 },

    #[error("cover distributions require a prefix-free answer space")]
    CoverRequiresPrefixFree,

    #[error("embedding response returned {got} vectors for {expected} texts")]
    EmbeddingCount { expected: usize, got: usize },

    #[error(transparent)]
    Core(#[from] tps_core::Error),

    #[error("invalid fixture JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BackendError {
    /// Whether a retry can plausibly succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }
}

pub type Result<T> = std::result::Result<T, BackendError>;
