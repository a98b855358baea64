//! Codebook-persuasion study: do richer annotation prompts (technical
//! definitions, few-shot exemplars) move a model's ordinal coding of
//! political sentences toward the expert consensus, measured per sentence
//! by the distance score and in aggregate by RMSE of decoded ratings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use tps_backend::{next_token_distribution, render_template, run_batch, BackendError, PromptBundle};
use tps_core::{distance_tps, rmse, Answer, Error as CoreError};

use crate::config::AnnotationParams;
use crate::dataset::{load_jsonl, round_half_up, SentenceRecord, Topic};
use crate::emit::{fmt_f64, write_json, CsvFile};
use crate::error::Result;
use crate::run::{
    greedy_rating, results_path, sample_std, scale_space, summary_path, ExperimentContext,
    QuarantineNote, RunOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptVariant {
    Basic,
    Technical,
    Fewshot,
}

impl PromptVariant {
    pub fn name(&self) -> &'static str {
        match self {
            PromptVariant::Basic => "basic",
            PromptVariant::Technical => "technical",
            PromptVariant::Fewshot => "fewshot",
        }
    }
}

pub const CSV_HEADERS: [&str; 10] = [
    "id",
    "topic",
    "variant",
    "expert_mean",
    "target",
    "score",
    "w_prior",
    "w_conditional",
    "greedy_basic",
    "greedy_variant",
];

#[derive(Serialize)]
struct VariantReport {
    topic: &'static str,
    variant: &'static str,
    n: usize,
    mean_score: f64,
    variance_score: f64,
    /// RMSE of decoded ratings against expert means; decoded sentinel
    /// answers are excluded and counted.
    rmse_decoded: Option<f64>,
    rmse_excluded: usize,
}

#[derive(Serialize)]
struct BaselineReport {
    topic: &'static str,
    n: usize,
    rmse_decoded: Option<f64>,
    rmse_excluded: usize,
}

#[derive(Serialize)]
struct Summary {
    experiment: &'static str,
    model: String,
    sentences: usize,
    filtered_out: usize,
    rows: usize,
    variants: Vec<VariantReport>,
    basic_baseline: Vec<BaselineReport>,
    quarantined: Vec<QuarantineNote>,
}

struct SentenceOutput {
    id: String,
    topic: Topic,
    expert_mean: f64,
    target: String,
    greedy_basic: Option<i64>,
    rows: Vec<VariantRow>,
}

struct VariantRow {
    variant: PromptVariant,
    score: f64,
    w_prior: f64,
    w_conditional: f64,
    greedy_variant: Option<i64>,
}

pub fn run(dataset: &Path, out_dir: &Path, ctx: &ExperimentContext) -> Result<RunOutcome> {
    let all: Vec<SentenceRecord> = load_jsonl(dataset)?;
    let params = &ctx.config.experiments.annotation_coding;
    let kept: Vec<SentenceRecord> = all
        .iter()
        .filter(|s| s.passes_filter(params.min_labels, params.max_label_std))
        .cloned()
        .collect();
    let filtered_out = all.len() - kept.len();

    let processed = run_batch(&kept, ctx.max_in_flight(), ctx.cancel, |_, sentence| {
        process_sentence(sentence, ctx, params)
            .map_err(|e| QuarantineNote::from_error(&sentence.id, &e))
    });

    let mut outcome = RunOutcome::default();
    let mut outputs = Vec::new();
    let mut quarantines = Vec::new();
    for result in processed {
        match result {
            Some(Ok(output)) => outputs.push(output),
            Some(Err(note)) => quarantines.push(note),
            None => outcome.cancelled = true,
        }
    }

    let mut csv = CsvFile::new(&CSV_HEADERS)?;
    let mut scores: BTreeMap<(Topic, PromptVariant), Vec<f64>> = BTreeMap::new();
    let mut decoded: BTreeMap<(Topic, PromptVariant), (Vec<f64>, Vec<f64>, usize)> =
        BTreeMap::new();
    let mut baseline: BTreeMap<Topic, (Vec<f64>, Vec<f64>, usize)> = BTreeMap::new();

    for output in &outputs {
        let base = baseline.entry(output.topic).or_default();
        match output.greedy_basic {
            Some(rating) => {
                base.0.push(rating as f64);
                base.1.push(output.expert_mean);
            }
            None => base.2 += 1,
        }
        for row in &output.rows {
            scores
                .entry((output.topic, row.variant))
                .or_default()
                .push(row.score);
            let entry = decoded.entry((output.topic, row.variant)).or_default();
            match row.greedy_variant {
                Some(rating) => {
                    entry.0.push(rating as f64);
                    entry.1.push(output.expert_mean);
                }
                None => entry.2 += 1,
            }
            csv.row([
                output.id.clone(),
                output.topic.name().to_owned(),
                row.variant.name().to_owned(),
                fmt_f64(output.expert_mean),
                output.target.clone(),
                fmt_f64(row.score),
                fmt_f64(row.w_prior),
                fmt_f64(row.w_conditional),
                output
                    .greedy_basic
                    .map(|r| r.to_string())
                    .unwrap_or_default(),
                row.greedy_variant
                    .map(|r| r.to_string())
                    .unwrap_or_default(),
            ])?;
            outcome.rows += 1;
        }
    }
    csv.save(&results_path(out_dir))?;

    let variants = scores
        .iter()
        .map(|((topic, variant), values)| {
            let (predicted, actual, excluded) = decoded
                .get(&(*topic, *variant))
                .cloned()
                .unwrap_or_default();
            let std = sample_std(values);
            VariantReport {
                topic: topic.name(),
                variant: variant.name(),
                n: values.len(),
                mean_score: values.iter().sum::<f64>() / values.len().max(1) as f64,
                variance_score: std * std,
                rmse_decoded: rmse(&predicted, &actual).ok(),
                rmse_excluded: excluded,
            }
        })
        .collect();
    let basic_baseline = baseline
        .iter()
        .map(|(topic, (predicted, actual, excluded))| BaselineReport {
            topic: topic.name(),
            n: predicted.len(),
            rmse_decoded: rmse(predicted, actual).ok(),
            rmse_excluded: *excluded,
        })
        .collect();

    outcome.note_quarantines(quarantines);
    write_json(
        &summary_path(out_dir),
        &Summary {
            experiment: "annotation-coding",
            model: ctx.config.backend.model.clone(),
            sentences: all.len(),
            filtered_out,
            rows: outcome.rows,
            variants,
            basic_baseline,
            quarantined: outcome.quarantined.clone(),
        },
    )?;
    Ok(outcome)
}

fn variant_query(
    ctx: &ExperimentContext,
    params: &AnnotationParams,
    sentence: &SentenceRecord,
    variant: PromptVariant,
) -> String {
    let definitions = match sentence.topic {
        Topic::Economic => params.definitions_economic.as_str(),
        Topic::Social => params.definitions_social.as_str(),
    };
    let examples = match sentence.topic {
        Topic::Economic => params.examples_economic.as_str(),
        Topic::Social => params.examples_social.as_str(),
    };
    render_template(
        ctx.config.prompts.annotation(variant),
        &[
            ("sentence", sentence.sentence.as_str()),
            ("definitions", definitions),
            ("examples", examples),
        ],
    )
}

fn process_sentence(
    sentence: &SentenceRecord,
    ctx: &ExperimentContext,
    params: &AnnotationParams,
) -> std::result::Result<SentenceOutput, BackendError> {
    let cfg = &ctx.config.backend;
    let (space, scale) = scale_space(params.scale_min, params.scale_max)
        .map_err(|e| BackendError::Protocol(e.to_string()))?;
    let expert_mean = sentence.label_mean();
    let rounded = round_half_up(expert_mean).clamp(params.scale_min, params.scale_max);
    let target_text = rounded.to_string();
    let target = Answer::new(target_text.clone()).map_err(CoreError::from)?;

    let basic_query = variant_query(ctx, params, sentence, PromptVariant::Basic);
    let basic_bundle = PromptBundle::new(
        ctx.config.prompts.instructions.clone(),
        None,
        basic_query,
    )?;
    let (prior, _) = next_token_distribution(ctx.backend, &basic_bundle, &space, cfg)?;
    let greedy_basic = greedy_rating(&prior.greedy(), &scale);

    let mut rows = Vec::new();
    for variant in [PromptVariant::Technical, PromptVariant::Fewshot] {
        let query = variant_query(ctx, params, sentence, variant);
        let bundle =
            PromptBundle::new(ctx.config.prompts.instructions.clone(), None, query)?;
        let (conditional, _) = next_token_distribution(ctx.backend, &bundle, &space, cfg)?;
        let result = distance_tps(&prior, &conditional, &target, &scale)?;
        rows.push(VariantRow {
            variant,
            score: result.score,
            w_prior: result.w_prior,
            w_conditional: result.w_conditional,
            greedy_variant: greedy_rating(&conditional.greedy(), &scale),
        });
    }

    Ok(SentenceOutput {
        id: sentence.id.clone(),
        topic: sentence.topic,
        expert_mean,
        target: target_text,
        greedy_basic,
        rows,
    })
}
