//! The backend abstraction: every inference call is a self-describing
//! [`Request`] with a canonical serialization, so live, recording, and
//! replay backends all key on the same SHA-256 request hash.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BackendError, Result};

/// One wire request. Field order is fixed; `canonical_json` is the byte
/// string the request hash is computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Request {
    /// Top-k log-probabilities for the single next position.
    NextToken {
        model: String,
        prompt: String,
        top_k: usize,
    },
    /// Echoed per-token log-probabilities of a supplied continuation.
    Score {
        model: String,
        prompt: String,
        continuation: String,
    },
    /// One embedding vector per input text.
    Embed { model: String, texts: Vec<String> },
}

impl Request {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("requests serialize")
    }

    /// SHA-256 of the canonical serialization, hex-encoded.
    pub fn key(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Per-position token log-probabilities (log-probabilities are ≤ 0;
/// at most `top_k` entries per position).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprobs {
    pub positions: Vec<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    /// `(token, logprob)` pairs for the next position.
    NextToken { top_logprobs: Vec<(String, f64)> },
    /// `(token, logprob)` pairs for each continuation token, in order.
    Score { tokens: Vec<(String, f64)> },
    Embed { vectors: Vec<Vec<f64>> },
}

/// An inference backend. Implementations must be shareable across threads;
/// callers may issue concurrent `execute` calls up to their configured
/// in-flight budget.
pub trait Backend: Send + Sync {
    fn execute(&self, request: &Request) -> Result<Response>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn execute(&self, request: &Request) -> Result<Response> {
        (**self).execute(request)
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn execute(&self, request: &Request) -> Result<Response> {
        (**self).execute(request)
    }
}

/// Exponential backoff schedule for retryable failures.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub retries: u32,
    pub initial_backoff: Duration,
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            retries: 0,
            initial_backoff: Duration::ZERO,
        }
    }
}

/// Runs `op`, retrying retryable failures up to `policy.retries` times with
/// doubling backoff. Non-retryable errors surface immediately.
pub fn with_retries<T>(policy: RetryPolicy, mut op: impl FnMut() -> Result<T>) -> Result<T> {
    let mut attempt = 0;
    loop {
        match op() {
            Ok(value) => return Ok(value),
            Err(err) if err.is_retryable() && attempt < policy.retries => {
                let backoff = policy.initial_backoff * 2u32.saturating_pow(attempt);
                if !backoff.is_zero() {
                    std::thread::sleep(backoff);
                }
                attempt += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

/// Validates the log-probability shape of a response: logprobs must be ≤ 0
/// (tiny positive rounding is clamped by callers, anything larger is a
/// protocol violation).
pub fn check_logprobs(pairs: &[(String, f64)]) -> Result<()> {
    for (token, lp) in pairs {
        if *lp > 1e-6 {
            return Err(BackendError::Protocol(format!(
                "log-probability {lp} for token {token:?} is positive"
            )));
        }
    }
    Ok(())
}
