//! Inference-backend client for the TPS harnesses.
//!
//! Prior and context-conditional answer distributions come from a
//! completions-style HTTP endpoint ([`http::HttpBackend`]), from a recorded
//! fixture ([`replay::ReplayBackend`]), or from any other [`Backend`]
//! implementation. Requests are content-addressed (SHA-256 of a canonical
//! serialization), which is what makes record/replay exact.

pub mod client;
pub mod config;
pub mod distribution;
pub mod error;
pub mod http;
pub mod prompt;
pub mod replay;

pub use client::{with_retries, Backend, Request, Response, RetryPolicy, TokenLogprobs};
pub use config::BackendConfig;
pub use distribution::{
    answer_string_probability, cover_distribution, distribution_from_logprobs, embed_table,
    next_token_distribution, next_token_logprobs, run_batch, TokenMatch,
};
pub use error::{BackendError, Result};
pub use http::HttpBackend;
pub use prompt::{render_template, templates, PromptBundle};
pub use replay::{FixtureRecord, RecordingBackend, ReplayBackend};
