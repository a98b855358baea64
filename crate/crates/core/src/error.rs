use thiserror::Error;

/// Errors produced by distribution construction, cost builders, the
/// transport solver, and the statistics routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("answer text must be nonempty")]
    EmptyAnswerText,

    #[error("answer set must be nonempty")]
    EmptyAnswerSet,

    #[error("duplicate answer {0:?}")]
    DuplicateAnswer(String),

    #[error("answers are not prefix-free: {first:?} and {second:?}")]
    PrefixViolation { first: String, second: String },

    #[error("answer {0:?} is not in the answer space")]
    UnknownAnswer(String),

    #[error("negative weight {weight} for answer {answer:?}")]
    NegativeWeight { answer: String, weight: f64 },

    #[error("weights sum to {total}, expected at most 1 (+1e-6)")]
    MassExceedsOne { total: f64 },

    #[error("weights sum to {total} but the space has no sentinel to absorb the residual")]
    NoSentinelForResidual { total: f64 },

    #[error("cannot renormalize: total weight is zero")]
    ZeroTotalMass,

    #[error("probability vector has wrong length: expected {expected}, got {got}")]
    ProbabilityLength { expected: usize, got: usize },

    #[error("scale map is not injective: {first:?} and {second:?} both map to {value}")]
    NonInjectiveScale {
        first: String,
        second: String,
        value: i64,
    },

    #[error("scale span is zero")]
    ZeroScaleSpan,

    #[error("answer {0:?} has no scale value")]
    UnmappedScaleAnswer(String),

    #[error("answer {0:?} has no embedding vector")]
    MissingVector(String),

    #[error("embedding vector for {0:?} has zero norm")]
    ZeroNormVector(String),

    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cost matrix entry ({row},{col}) is negative: {value}")]
    NegativeCost {
        row: String,
        col: String,
        value: f64,
    },

    #[error("cost matrix has wrong size: expected {expected} entries, got {got}")]
    CostMatrixSize { expected: usize, got: usize },

    #[error("cost file header does not match the answer space: expected {expected:?}, got {got:?}")]
    CostHeaderMismatch { expected: String, got: String },

    #[error("cost file row {0} is ragged or mislabeled")]
    MalformedCostRow(usize),

    #[error("distributions or cost are defined over different answer spaces")]
    SpaceMismatch,

    #[error("support size {support} exceeds the solver cap {cap}")]
    SupportTooLarge { support: usize, cap: usize },

    #[error("transport solver exceeded the iteration limit (support {support})")]
    SolverIterationLimit { support: usize },

    #[error("sentinel mass must be zero for the 1-d fast path (got {0})")]
    NonzeroSentinelMass(f64),

    #[error("input sequence must be nonempty")]
    EmptyInput,

    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} values, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("sample variance is zero")]
    ZeroVariance,

    #[error("rank variance is zero (all values tied)")]
    ZeroRankVariance,

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
