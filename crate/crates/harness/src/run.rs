//! Shared harness machinery: the run context handed to every experiment,
//! quarantine bookkeeping, and the scale-space helpers.

use std::path::Path;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use serde::Serialize;
use tps_backend::{Backend, BackendError, PromptBundle};
use tps_core::{Answer, AnswerSpace, Outcome, ScaleMap};

use crate::config::RunConfig;
use crate::error::Result;

/// Everything an experiment needs besides its dataset.
pub struct ExperimentContext<'a> {
    pub backend: &'a dyn Backend,
    pub config: &'a RunConfig,
    pub seed: u64,
    pub cancel: &'a AtomicBool,
}

impl ExperimentContext<'_> {
    /// A bundle carrying the configured instruction text.
    pub fn bundle(&self, context: Option<String>, query: String) -> Result<PromptBundle> {
        Ok(PromptBundle::new(
            self.config.prompts.instructions.clone(),
            context,
            query,
        )
        .map_err(BackendError::from)?)
    }

    pub fn max_in_flight(&self) -> usize {
        self.config.backend.max_in_flight
    }
}

/// A record (or record group) that failed at the backend and was skipped so
/// the run could continue.
#[derive(Debug, Clone, Serialize)]
pub struct QuarantineNote {
    pub id: String,
    pub error: String,
    /// True when the failure was transport exhaustion (retries used up).
    pub transport: bool,
}

impl QuarantineNote {
    pub fn from_error(id: impl Into<String>, error: &BackendError) -> Self {
        Self {
            id: id.into(),
            error: error.to_string(),
            transport: error.is_retryable(),
        }
    }
}

/// What a harness reports back to the CLI.
#[derive(Debug, Default)]
pub struct RunOutcome {
    /// Rows written to the results CSV.
    pub rows: usize,
    pub quarantined: Vec<QuarantineNote>,
    /// At least one quarantine was a transport failure after retries.
    pub transport_exhausted: bool,
    /// The cancel flag stopped the run before all records were processed.
    pub cancelled: bool,
}

impl RunOutcome {
    pub fn note_quarantines(&mut self, notes: Vec<QuarantineNote>) {
        self.transport_exhausted |= notes.iter().any(|n| n.transport);
        self.quarantined.extend(notes);
    }
}

/// The decimal-string answer space `lo..=hi` plus sentinel, with its scale.
pub fn scale_space(lo: i64, hi: i64) -> Result<(Arc<AnswerSpace>, ScaleMap)> {
    let answers = (lo..=hi)
        .map(|v| Answer::new(v.to_string()))
        .collect::<tps_core::Result<Vec<_>>>()?;
    let space = AnswerSpace::new(answers, true)?;
    let scale = ScaleMap::integer_range(lo, hi)?;
    Ok((space, scale))
}

/// Greedy outcome as a scale position; `None` for the sentinel.
pub fn greedy_rating(outcome: &Outcome, scale: &ScaleMap) -> Option<i64> {
    outcome.as_answer().and_then(|a| scale.numeric(a))
}

/// Sample standard deviation (0 for n < 2).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    var.sqrt()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard output file names inside an experiment's output directory.
pub fn results_path(out_dir: &Path) -> std::path::PathBuf {
    out_dir.join("results.csv")
}

pub fn summary_path(out_dir: &Path) -> std::path::PathBuf {
    out_dir.join("summary.json")
}

pub fn samples_path(out_dir: &Path) -> std::path::PathBuf {
    out_dir.join("samples.json")
}
