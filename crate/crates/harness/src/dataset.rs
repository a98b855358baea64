//! Dataset ingestion: JSON-lines files, one schema per harness, validated
//! with line numbers and unique-id checks at load time.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub trait DatasetRecord {
    fn id(&self) -> &str;
    /// Schema checks beyond what serde enforces.
    fn validate(&self) -> std::result::Result<(), String>;
}

/// Reads one record per line, reporting schema violations with their line
/// number and rejecting duplicate ids.
pub fn read_jsonl<T: DatasetRecord + DeserializeOwned>(reader: impl Read) -> Result<Vec<T>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| HarnessError::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        record.validate().map_err(|message| HarnessError::Schema {
            line: line_no,
            message,
        })?;
        if !seen.insert(record.id().to_owned()) {
            return Err(HarnessError::DuplicateId {
                id: record.id().to_owned(),
                line: line_no,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_jsonl<T: DatasetRecord + DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    read_jsonl(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn name(&self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }

    pub fn opposite(&self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// A factual query with a persuading context and a declared answer set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    /// Substituted for `{entity}` in the query template.
    pub entity: String,
    pub context: String,
    pub target: String,
    #[serde(default)]
    pub answers: Vec<String>,
}

impl DatasetRecord for QueryRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.target.is_empty() {
            return Err("missing \"target\"".into());
        }
        if self.entity.is_empty() {
            return Err("missing \"entity\"".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SenseDefinition {
    pub label: String,
    pub definition: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SenseContext {
    /// Label of the sense this sentence is cued toward.
    pub sense: String,
    pub text: String,
}

/// One ambiguous word with exactly four senses and cueing sentences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordSenseRecord {
    pub id: String,
    pub word: String,
    pub senses: Vec<SenseDefinition>,
    pub contexts: Vec<SenseContext>,
}

impl DatasetRecord for WordSenseRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.senses.len() != 4 {
            return Err(format!("expected exactly 4 senses, got {}", self.senses.len()));
        }
        let labels: HashSet<&str> = self.senses.iter().map(|s| s.label.as_str()).collect();
        if labels.len() != 4 {
            return Err("sense labels must be distinct".into());
        }
        for context in &self.contexts {
            if !labels.contains(context.sense.as_str()) {
                return Err(format!("context cues unknown sense {:?}", context.sense));
            }
        }
        if self.contexts.is_empty() {
            return Err("record has no context sentences".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Review {
    pub text: String,
    pub polarity: Polarity,
}

/// A movie with a pool of polarity-tagged reviews.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MovieRecord {
    pub id: String,
    pub title: String,
    pub reviews: Vec<Review>,
}

impl MovieRecord {
    pub fn indices_of(&self, polarity: Polarity) -> Vec<usize> {
        self.reviews
            .iter()
            .enumerate()
            .filter(|(_, r)| r.polarity == polarity)
            .map(|(i, _)| i)
            .collect()
    }
}

impl DatasetRecord for MovieRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.title.is_empty() {
            return Err("missing \"title\"".into());
        }
        if self.reviews.is_empty() {
            return Err("movie has no reviews".into());
        }
        Ok(())
    }
}

/// Nine positive reviews in fixed order plus one contradictory review.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermutationSetRecord {
    pub id: String,
    pub title: String,
    pub positive_reviews: Vec<String>,
    pub negative_review: String,
    /// Scale answer the distance score is computed toward.
    #[serde(default = "default_permutation_target")]
    pub target: String,
}

fn default_permutation_target() -> String {
    "9".into()
}

impl DatasetRecord for PermutationSetRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.positive_reviews.len() != 9 {
            return Err(format!(
                "expected 9 positive reviews, got {}",
                self.positive_reviews.len()
            ));
        }
        if self.negative_review.is_empty() {
            return Err("missing \"negative_review\"".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topic {
    Economic,
    Social,
}

impl Topic {
    pub fn name(&self) -> &'static str {
        match self {
            Topic::Economic => "economic",
            Topic::Social => "social",
        }
    }
}

/// A sentence with expert position annotations on an ordinal scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub sentence: String,
    pub topic: Topic,
    pub expert_labels: Vec<f64>,
}

impl SentenceRecord {
    pub fn label_mean(&self) -> f64 {
        self.expert_labels.iter().sum::<f64>() / self.expert_labels.len() as f64
    }

    /// Sample standard deviation of the labels (0 for a single label).
    pub fn label_std(&self) -> f64 {
        let n = self.expert_labels.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.label_mean();
        let var = self
            .expert_labels
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        var.sqrt()
    }

    /// Meets the agreement filter: enough experts, low enough disagreement.
    pub fn passes_filter(&self, min_labels: usize, max_std: f64) -> bool {
        self.expert_labels.len() >= min_labels && self.label_std() <= max_std
    }
}

impl DatasetRecord for SentenceRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.sentence.is_empty() {
            return Err("missing \"sentence\"".into());
        }
        if self.expert_labels.is_empty() {
            return Err("missing \"expert_labels\"".into());
        }
        if self.expert_labels.iter().any(|l| !l.is_finite()) {
            return Err("expert labels must be finite numbers".into());
        }
        Ok(())
    }
}

/// Half-up rounding to the nearest integer (2.5 rounds to 3).
pub fn round_half_up(value: f64) -> i64 {
    (value + 0.5).floor() as i64
}
