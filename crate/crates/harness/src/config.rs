//! The run configuration: one TOML document with a `[backend]` table,
//! optional prompt-template overrides, and per-experiment parameters.
//! Every field has a default so a minimal file works.

use serde::{Deserialize, Serialize};
use tps_backend::{templates, BackendConfig};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub backend: BackendConfig,
    pub prompts: PromptOverrides,
    pub experiments: ExperimentParams,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config
            .backend
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Inline template overrides; `None` uses the bundled asset.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptOverrides {
    /// Instruction text prepended to every prompt.
    pub instructions: String,
    pub official_language: Option<String>,
    pub movie_review_prior: Option<String>,
    pub movie_review_context: Option<String>,
    pub word_sense_prior: Option<String>,
    pub word_sense_context: Option<String>,
    pub annotation_basic: Option<String>,
    pub annotation_technical: Option<String>,
    pub annotation_fewshot: Option<String>,
}

impl PromptOverrides {
    pub fn official_language(&self) -> &str {
        self.official_language
            .as_deref()
            .unwrap_or(templates::OFFICIAL_LANGUAGE)
    }

    pub fn movie_review_prior(&self) -> &str {
        self.movie_review_prior
            .as_deref()
            .unwrap_or(templates::MOVIE_REVIEW_PRIOR)
    }

    pub fn movie_review_context(&self) -> &str {
        self.movie_review_context
            .as_deref()
            .unwrap_or(templates::MOVIE_REVIEW_CONTEXT)
    }

    pub fn word_sense_prior(&self) -> &str {
        self.word_sense_prior
            .as_deref()
            .unwrap_or(templates::WORD_SENSE_PRIOR)
    }

    pub fn word_sense_context(&self) -> &str {
        self.word_sense_context
            .as_deref()
            .unwrap_or(templates::WORD_SENSE_CONTEXT)
    }

    pub fn annotation(&self, variant: super::annotation::PromptVariant) -> &str {
        use super::annotation::PromptVariant;
        match variant {
            PromptVariant::Basic => self
                .annotation_basic
                .as_deref()
                .unwrap_or(templates::ANNOTATION_BASIC),
            PromptVariant::Technical => self
                .annotation_technical
                .as_deref()
                .unwrap_or(templates::ANNOTATION_TECHNICAL),
            PromptVariant::Fewshot => self
                .annotation_fewshot
                .as_deref()
                .unwrap_or(templates::ANNOTATION_FEWSHOT),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentParams {
    pub greedy_vs_tps: GreedyParams,
    pub word_sense: WordSenseParams,
    pub tps_vs_k: TpsVsKParams,
    pub concat_vs_individual: ConcatParams,
    pub lost_in_middle: LostInMiddleParams,
    pub annotation_coding: AnnotationParams,
}

/// Where the answer space of a QA record comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerSource {
    /// The record's declared answer list.
    Record,
    /// The union of top-k tokens returned for the prior and conditional
    /// prompts, plus the target.
    TopKUnion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionMode {
    /// Single next-token log-probabilities.
    NextToken,
    /// Chain-rule string probabilities over the prefix-free cover.
    Cover,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GreedyParams {
    pub answer_source: AnswerSource,
    pub distribution_mode: DistributionMode,
}

impl Default for GreedyParams {
    fn default() -> Self {
        Self {
            answer_source: AnswerSource::Record,
            distribution_mode: DistributionMode::NextToken,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WordSenseParams {
    /// Significance level before the Bonferroni correction.
    pub alpha: f64,
    /// "backend" or a path to a JSON-lines embedding file.
    pub embeddings: String,
}

impl Default for WordSenseParams {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            embeddings: "backend".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TpsVsKParams {
    pub scale_min: i64,
    pub scale_max: i64,
    pub k_min: usize,
    pub k_max: usize,
    pub noisy_k_min: usize,
    pub noisy_k_max: usize,
    /// Movies with a prior expected rating strictly above this go to the
    /// negative-direction set.
    pub prior_split: f64,
}

impl Default for TpsVsKParams {
    fn default() -> Self {
        Self {
            scale_min: 0,
            scale_max: 9,
            k_min: 1,
            k_max: 10,
            noisy_k_min: 4,
            noisy_k_max: 10,
            prior_split: 4.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConcatParams {
    pub scale_min: i64,
    pub scale_max: i64,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for ConcatParams {
    fn default() -> Self {
        Self {
            scale_min: 0,
            scale_max: 9,
            k_min: 4,
            k_max: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LostInMiddleParams {
    pub scale_min: i64,
    pub scale_max: i64,
    pub mad_multiplier: f64,
    pub flag_when_mad_zero: bool,
}

impl Default for LostInMiddleParams {
    fn default() -> Self {
        Self {
            scale_min: 0,
            scale_max: 9,
            mad_multiplier: 3.0,
            flag_when_mad_zero: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotationParams {
    pub scale_min: i64,
    pub scale_max: i64,
    pub min_labels: usize,
    /// Sample standard deviation cap for the expert-agreement filter.
    pub max_label_std: f64,
    pub definitions_economic: String,
    pub definitions_social: String,
    pub examples_economic: String,
    pub examples_social: String,
}

impl Default for AnnotationParams {
    fn default() -> Self {
        Self {
            scale_min: 1,
            scale_max: 5,
            min_labels: 3,
            max_label_std: 0.5,
            definitions_economic: String::new(),
            definitions_social: String::new(),
            examples_economic: String::new(),
            examples_social: String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.backend.top_k, 20);
        assert_eq!(cfg.experiments.tps_vs_k.k_max, 10);
        assert!(cfg.prompts.official_language().contains("official language"));
    }

    #[test]
    fn overrides_win() {
        let cfg = RunConfig::from_toml(
            r#"
seed = 7
[backend]
model = "m"
top_k = 5
[prompts]
official_language = "Q: {entity}?\nA:"
[experiments.tps_vs_k]
k_max = 6
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.backend.top_k, 5);
        assert_eq!(cfg.prompts.official_language(), "Q: {entity}?\nA:");
        assert_eq!(cfg.experiments.tps_vs_k.k_max, 6);
        assert_eq!(cfg.experiments.tps_vs_k.k_min, 1);
    }

    #[test]
    fn invalid_backend_limits_are_config_errors() {
        let err = RunConfig::from_toml("[backend]\ntop_k = 0\n").unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)));
    }
}
