//! From wire responses to answer distributions: next-token mapping with
//! token canonicalization, chain-rule string probabilities, prefix-free
//! cover distributions, and embedding tables.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use tps_core::{
    Answer, AnswerDistribution, AnswerSpace, EmbeddingTable, ResidualMode,
};

use crate::client::{Backend, Request, Response};
use crate::config::BackendConfig;
use crate::error::{BackendError, Result};
use crate::prompt::PromptBundle;

/// How much of the returned top-k actually mapped onto the answer space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenMatch {
    pub matched_tokens: usize,
    pub matched_mass: f64,
}

fn canonical_token(token: &str, strip_whitespace: bool) -> &str {
    if strip_whitespace {
        token.trim()
    } else {
        token
    }
}

/// Maps raw top-k log-probabilities onto a space. Tokens canonicalizing to
/// the same answer have their probabilities summed; unmatched mass goes to
/// the sentinel (or triggers renormalization, per config). With no match at
/// all, sentinel mode falls back to the all-sentinel distribution.
pub fn distribution_from_logprobs(
    space: &Arc<AnswerSpace>,
    top_logprobs: &[(String, f64)],
    config: &BackendConfig,
) -> Result<(AnswerDistribution, TokenMatch)> {
    let mut weights: Vec<(String, f64)> = Vec::new();
    let mut matched_tokens = 0usize;
    let mut matched_mass = 0.0f64;
    for (token, logprob) in top_logprobs {
        let text = canonical_token(token, config.strip_whitespace);
        if space.index_of_text(text).is_some() {
            let p = logprob.min(0.0).exp();
            weights.push((text.to_owned(), p));
            matched_tokens += 1;
            matched_mass += p;
        }
    }
    let dist = AnswerDistribution::build(space, weights, config.residual)?;
    Ok((
        dist,
        TokenMatch {
            matched_tokens,
            matched_mass,
        },
    ))
}

/// One next-token query mapped onto `space`.
pub fn next_token_distribution(
    backend: &dyn Backend,
    bundle: &PromptBundle,
    space: &Arc<AnswerSpace>,
    config: &BackendConfig,
) -> Result<(AnswerDistribution, TokenMatch)> {
    let response = backend.execute(&Request::NextToken {
        model: config.model.clone(),
        prompt: bundle.render(),
        top_k: config.top_k,
    })?;
    let Response::NextToken { top_logprobs } = response else {
        return Err(BackendError::Protocol(
            "expected a next-token response".into(),
        ));
    };
    distribution_from_logprobs(space, &top_logprobs, config)
}

/// Raw next-token pairs, for callers that assemble the space afterwards
/// (e.g. union-of-top-k answer spaces).
pub fn next_token_logprobs(
    backend: &dyn Backend,
    bundle: &PromptBundle,
    config: &BackendConfig,
) -> Result<Vec<(String, f64)>> {
    let response = backend.execute(&Request::NextToken {
        model: config.model.clone(),
        prompt: bundle.render(),
        top_k: config.top_k,
    })?;
    match response {
        Response::NextToken { top_logprobs } => Ok(top_logprobs),
        _ => Err(BackendError::Protocol(
            "expected a next-token response".into(),
        )),
    }
}

/// Chain-rule probability of a full answer string: the product over its
/// tokens of the conditional token probability given the prompt and the
/// preceding answer tokens.
pub fn answer_string_probability(
    backend: &dyn Backend,
    bundle: &PromptBundle,
    answer: &Answer,
    config: &BackendConfig,
) -> Result<f64> {
    let response = backend.execute(&Request::Score {
        model: config.model.clone(),
        prompt: bundle.render(),
        continuation: answer.text().to_owned(),
    })?;
    let Response::Score { tokens } = response else {
        return Err(BackendError::Protocol("expected a score response".into()));
    };
    if tokens.is_empty() {
        return Err(BackendError::Tokenization {
            answer: answer.text().to_owned(),
            reason: "scoring returned no continuation tokens".into(),
        });
    }
    let log_prob: f64 = tokens.iter().map(|(_, lp)| lp.min(0.0)).sum();
    Ok(log_prob.exp())
}

/// Scores every answer of a prefix-free space and assigns the residual to
/// the sentinel. A probability sum above `1 + 1e-6` signals a broken cover
/// or an inconsistent backend and is an error.
pub fn cover_distribution(
    backend: &dyn Backend,
    bundle: &PromptBundle,
    space: &Arc<AnswerSpace>,
    config: &BackendConfig,
) -> Result<AnswerDistribution> {
    if !space.is_prefix_free() {
        return Err(BackendError::CoverRequiresPrefixFree);
    }
    let mut weights = Vec::with_capacity(space.num_answers());
    let mut total = 0.0;
    for answer in space.answers() {
        let p = answer_string_probability(backend, bundle, answer, config)?;
        total += p;
        weights.push((answer.text().to_owned(), p));
    }
    if total > 1.0 + 1e-6 {
        return Err(BackendError::CoverMassExceeded { total });
    }
    Ok(AnswerDistribution::build(
        space,
        weights,
        ResidualMode::Sentinel,
    )?)
}

/// Embeds each distinct text once (first-occurrence order) and returns the
/// resulting table. An empty input yields an empty table without a request.
pub fn embed_table(
    backend: &dyn Backend,
    texts: &[String],
    config: &BackendConfig,
) -> Result<EmbeddingTable> {
    let mut distinct: Vec<String> = Vec::new();
    for text in texts {
        if !distinct.contains(text) {
            distinct.push(text.clone());
        }
    }
    if distinct.is_empty() {
        return Ok(EmbeddingTable::new(Vec::<(String, Vec<f64>)>::new())?);
    }
    let response = backend.execute(&Request::Embed {
        model: config.model.clone(),
        texts: distinct.clone(),
    })?;
    let Response::Embed { vectors } = response else {
        return Err(BackendError::Protocol("expected an embed response".into()));
    };
    if vectors.len() != distinct.len() {
        return Err(BackendError::EmbeddingCount {
            expected: distinct.len(),
            got: vectors.len(),
        });
    }
    Ok(EmbeddingTable::new(distinct.into_iter().zip(vectors))?)
}

/// Applies `f` to every item with up to `max_in_flight` worker threads.
/// Results come back in item order regardless of scheduling, so batch
/// output is deterministic. Items not started before `cancel` was raised
/// yield `None`.
pub fn run_batch<I, T, F>(
    items: &[I],
    max_in_flight: usize,
    cancel: &AtomicBool,
    f: F,
) -> Vec<Option<T>>
where
    I: Sync,
    T: Send,
    F: Fn(usize, &I) -> T + Sync,
{
    let workers = max_in_flight.max(1).min(items.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<T>> = (0..items.len()).map(|_| None).collect();
    let slots: Vec<std::sync::Mutex<&mut Option<T>>> =
        results.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if cancel.load(Ordering::SeqCst) {
                    break;
                }
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= items.len() {
                    break;
                }
                let value = f(index, &items[index]);
                **slots[index].lock().expect("result slot poisoned") = Some(value);
            });
        }
    });
    drop(slots);
    results
}
