//! Live HTTP backend speaking a completions-style JSON contract:
//!
//! - `POST {base}/v1/completions` with `max_tokens: 1, logprobs: k` returns
//!   top-k next-token log-probabilities;
//! - the same endpoint with `max_tokens: 0, logprobs: 0, echo: true` scores
//!   a supplied continuation, returning per-token log-probabilities and
//!   text offsets;
//! - `POST {base}/v1/embeddings` returns one vector per input text.
//!
//! Both modes are standard across open inference servers; the client is
//! written against this contract, not any vendor.

use std::collections::HashMap;
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use ureq::Agent;

use crate::client::{check_logprobs, with_retries, Backend, Request, Response};
use crate::config::BackendConfig;
use crate::error::{BackendError, Result};

pub struct HttpBackend {
    agent: Agent,
    config: BackendConfig,
    in_flight: Semaphore,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self> {
        config.validate()?;
        let agent = Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .new_agent();
        let in_flight = Semaphore::new(config.max_in_flight);
        Ok(Self {
            agent,
            config,
            in_flight,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn post(&self, path: &str, body: &impl Serialize) -> Result<serde_json::Value> {
        let url = format!("{}{path}", self.config.base_url.trim_end_matches('/'));
        let mut request = self.agent.post(&url);
        if let Some(key) = self.config.api_key() {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if (500..600).contains(&status) || status == 429 {
            return Err(BackendError::Transport(format!("status {status}")));
        }
        if !(200..300).contains(&status) {
            let message = response
                .body_mut()
                .read_to_string()
                .unwrap_or_default()
                .chars()
                .take(200)
                .collect();
            return Err(BackendError::Rejected { status, message });
        }
        response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Protocol(e.to_string()))
    }

    fn next_token(&self, prompt: &str, top_k: usize) -> Result<Response> {
        let body = CompletionRequest {
            model: &self.config.model,
            prompt,
            max_tokens: 1,
            logprobs: top_k,
            echo: false,
            temperature: 0.0,
        };
        let value = self.post("/v1/completions", &body)?;
        let parsed: CompletionResponse = serde_json::from_value(value)
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::Protocol("no choices in response".into()))?;
        let logprobs = choice
            .logprobs
            .ok_or_else(|| BackendError::Protocol("response lacks logprobs".into()))?;
        let position = logprobs
            .top_logprobs
            .and_then(|mut t| if t.is_empty() { None } else { Some(t.remove(0)) })
            .ok_or_else(|| BackendError::Protocol("response lacks top_logprobs".into()))?;
        let mut pairs: Vec<(String, f64)> = position.into_iter().collect();
        // Servers emit maps; fix an order so downstream hashing is stable.
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        check_logprobs(&pairs)?;
        Ok(Response::NextToken { top_logprobs: pairs })
    }

    fn score(&self, prompt: &str, continuation: &str) -> Result<Response> {
        let full = format!("{prompt}{continuation}");
        let body = CompletionRequest {
            model: &self.config.model,
            prompt: &full,
            max_tokens: 0,
            logprobs: 0,
            echo: true,
            temperature: 0.0,
        };
        let value = self.post("/v1/completions", &body)?;
        let parsed: CompletionResponse = serde_json::from_value(value)
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::Protocol("no choices in response".into()))?;
        let logprobs = choice.logprobs.ok_or(BackendError::ScoringUnsupported)?;
        let (tokens, token_logprobs, offsets) =
            match (logprobs.tokens, logprobs.token_logprobs, logprobs.text_offset) {
                (Some(t), Some(l), Some(o)) => (t, l, o),
                _ => return Err(BackendError::ScoringUnsupported),
            };
        if tokens.len() != token_logprobs.len() || tokens.len() != offsets.len() {
            return Err(BackendError::Protocol(
                "echoed logprob arrays disagree in length".into(),
            ));
        }
        let boundary = prompt.len();
        let start = offsets.iter().position(|&o| o >= boundary).ok_or_else(|| {
            BackendError::Tokenization {
                answer: continuation.to_owned(),
                reason: "no token at or after the prompt boundary".into(),
            }
        })?;
        if offsets[start] != boundary {
            return Err(BackendError::Tokenization {
                answer: continuation.to_owned(),
                reason: "a token straddles the prompt/continuation boundary".into(),
            });
        }
        let echoed: String = tokens[start..].concat();
        if echoed != continuation {
            return Err(BackendError::Tokenization {
                answer: continuation.to_owned(),
                reason: format!("echoed continuation {echoed:?} differs"),
            });
        }
        let mut scored = Vec::with_capacity(tokens.len() - start);
        for (token, lp) in tokens[start..].iter().zip(&token_logprobs[start..]) {
            let lp = lp.ok_or_else(|| BackendError::Protocol(
                format!("continuation token {token:?} has no log-probability"),
            ))?;
            scored.push((token.clone(), lp));
        }
        check_logprobs(&scored)?;
        Ok(Response::Score { tokens: scored })
    }

    fn embed(&self, texts: &[String]) -> Result<Response> {
        let body = EmbeddingRequest {
            model: &self.config.model,
            input: texts,
        };
        let value = self.post("/v1/embeddings", &body)?;
        let parsed: EmbeddingResponse = serde_json::from_value(value)
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        if parsed.data.len() != texts.len() {
            return Err(BackendError::EmbeddingCount {
                expected: texts.len(),
                got: parsed.data.len(),
            });
        }
        let mut data = parsed.data;
        data.sort_by_key(|d| d.index);
        Ok(Response::Embed {
            vectors: data.into_iter().map(|d| d.embedding).collect(),
        })
    }
}

impl Backend for HttpBackend {
    fn execute(&self, request: &Request) -> Result<Response> {
        let _permit = self.in_flight.acquire();
        with_retries(self.config.retry_policy(), || match request {
            Request::NextToken { prompt, top_k, .. } => self.next_token(prompt, *top_k),
            Request::Score {
                prompt,
                continuation,
                ..
            } => self.score(prompt, continuation),
            Request::Embed { texts, .. } => self.embed(texts),
        })
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: usize,
    logprobs: usize,
    echo: bool,
    temperature: f64,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    #[serde(default)]
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Deserialize)]
struct ChoiceLogprobs {
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    token_logprobs: Option<Vec<Option<f64>>>,
    #[serde(default)]
    top_logprobs: Option<Vec<HashMap<String, f64>>>,
    #[serde(default)]
    text_offset: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

/// Counting semaphore bounding concurrent requests.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphorePermit<'_> {
        let mut permits = self.permits.lock().expect("semaphore poisoned");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore poisoned");
        }
        *permits -= 1;
        SemaphorePermit { semaphore: self }
    }
}

struct SemaphorePermit<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphorePermit<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore poisoned");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}
