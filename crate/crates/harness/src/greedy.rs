//! Greedy-answer categorization versus the basic score: for each query and
//! persuading context, does the greedily decoded answer agree with the
//! context, keep the prior answer, or land elsewhere — and how does the
//! score distribution differ across those categories.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use tps_backend::{
    cover_distribution, distribution_from_logprobs, next_token_distribution, next_token_logprobs,
    render_template, run_batch, BackendError, PromptBundle,
};
use tps_core::{basic_tps, Answer, AnswerDistribution, AnswerSpace};

use crate::config::{AnswerSource, DistributionMode};
use crate::dataset::{load_jsonl, QueryRecord};
use crate::emit::{fmt_f64, write_json, CsvFile, ScoreSummary};
use crate::error::Result;
use crate::record::{categorize, Category, ContextPiece, ExperimentRecord};
use crate::run::{results_path, summary_path, ExperimentContext, QuarantineNote, RunOutcome};

pub const CSV_HEADERS: [&str; 12] = [
    "id",
    "target",
    "category",
    "score",
    "w_prior",
    "w_conditional",
    "prior_target_prob",
    "conditional_target_prob",
    "greedy_prior",
    "greedy_conditional",
    "prior_sentinel_mass",
    "conditional_sentinel_mass",
];

#[derive(Serialize)]
struct Summary {
    experiment: &'static str,
    model: String,
    records: usize,
    rows: usize,
    categories: BTreeMap<&'static str, Option<ScoreSummary>>,
    quarantined: Vec<QuarantineNote>,
}

pub fn run(dataset: &Path, out_dir: &Path, ctx: &ExperimentContext) -> Result<RunOutcome> {
    let records: Vec<QueryRecord> = load_jsonl(dataset)?;
    let params = &ctx.config.experiments.greedy_vs_tps;

    let processed = run_batch(&records, ctx.max_in_flight(), ctx.cancel, |_, record| {
        process_record(record, ctx, params.answer_source, params.distribution_mode)
            .map_err(|e| QuarantineNote::from_error(&record.id, &e))
    });

    let mut outcome = RunOutcome::default();
    let mut rows = Vec::new();
    let mut by_category: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    let mut quarantines = Vec::new();
    for result in processed {
        match result {
            Some(Ok(record)) => {
                by_category
                    .entry(record.category.name())
                    .or_default()
                    .push(record.tps.score);
                rows.push(record);
            }
            Some(Err(note)) => quarantines.push(note),
            None => outcome.cancelled = true,
        }
    }

    let mut csv = CsvFile::new(&CSV_HEADERS)?;
    for record in &rows {
        csv.row([
            record.id.clone(),
            record.target.text().to_owned(),
            record.category.name().to_owned(),
            fmt_f64(record.tps.score),
            fmt_f64(record.tps.w_prior),
            fmt_f64(record.tps.w_conditional),
            fmt_f64(record.prior.prob_text(record.target.text())),
            fmt_f64(record.conditional.prob_text(record.target.text())),
            record.greedy_prior.label().to_owned(),
            record.greedy_conditional.label().to_owned(),
            fmt_f64(record.prior.sentinel_mass()),
            fmt_f64(record.conditional.sentinel_mass()),
        ])?;
    }
    csv.save(&results_path(out_dir))?;

    let categories = [
        Category::AgreesWithContext.name(),
        Category::KeepsPrior.name(),
        Category::Other.name(),
    ]
    .into_iter()
    .map(|name| {
        let summary = by_category.get(name).and_then(|v| ScoreSummary::of(v));
        (name, summary)
    })
    .collect();

    outcome.rows = rows.len();
    outcome.note_quarantines(quarantines);
    write_json(
        &summary_path(out_dir),
        &Summary {
            experiment: "greedy-vs-tps",
            model: ctx.config.backend.model.clone(),
            records: records.len(),
            rows: outcome.rows,
            categories,
            quarantined: outcome.quarantined.clone(),
        },
    )?;
    Ok(outcome)
}

fn process_record(
    record: &QueryRecord,
    ctx: &ExperimentContext,
    answer_source: AnswerSource,
    mode: DistributionMode,
) -> std::result::Result<ExperimentRecord, BackendError> {
    let cfg = &ctx.config.backend;
    let query = render_template(
        ctx.config.prompts.official_language(),
        &[("entity", &record.entity)],
    );
    let prior_bundle = PromptBundle::new(
        ctx.config.prompts.instructions.clone(),
        None,
        query.clone(),
    )?;
    let conditional_bundle = PromptBundle::new(
        ctx.config.prompts.instructions.clone(),
        Some(record.context.clone()),
        query.clone(),
    )?;
    let target = Answer::new(record.target.clone()).map_err(tps_core::Error::from)?;

    let (prior, conditional) = match answer_source {
        AnswerSource::Record => {
            let mut answers = record.answers.clone();
            if !answers.contains(&record.target) {
                answers.push(record.target.clone());
            }
            let answers = answers
                .into_iter()
                .map(Answer::new)
                .collect::<tps_core::Result<Vec<_>>>()?;
            let space = AnswerSpace::new(answers, true)?;
            distributions_for(ctx, &space, &prior_bundle, &conditional_bundle, mode)?
        }
        AnswerSource::TopKUnion => {
            let prior_raw = next_token_logprobs(ctx.backend, &prior_bundle, cfg)?;
            let conditional_raw = next_token_logprobs(ctx.backend, &conditional_bundle, cfg)?;
            let mut tokens: Vec<String> = prior_raw
                .iter()
                .chain(&conditional_raw)
                .map(|(t, _)| {
                    if cfg.strip_whitespace {
                        t.trim().to_owned()
                    } else {
                        t.clone()
                    }
                })
                .filter(|t| !t.is_empty())
                .collect();
            tokens.push(record.target.clone());
            tokens.sort_unstable();
            tokens.dedup();
            let answers = tokens
                .into_iter()
                .map(Answer::new)
                .collect::<tps_core::Result<Vec<_>>>()?;
            let space = AnswerSpace::from_tokens(answers, true)?;
            match mode {
                DistributionMode::NextToken => (
                    distribution_from_logprobs(&space, &prior_raw, cfg)?.0,
                    distribution_from_logprobs(&space, &conditional_raw, cfg)?.0,
                ),
                DistributionMode::Cover => (
                    cover_distribution(ctx.backend, &prior_bundle, &space, cfg)?,
                    cover_distribution(ctx.backend, &conditional_bundle, &space, cfg)?,
                ),
            }
        }
    };

    let tps = basic_tps(&prior, &conditional, &target).map_err(BackendError::from)?;
    let greedy_prior = prior.greedy();
    let greedy_conditional = conditional.greedy();
    let category = categorize(&greedy_prior, &greedy_conditional, &target);
    Ok(ExperimentRecord {
        id: record.id.clone(),
        query,
        contexts: vec![ContextPiece {
            text: record.context.clone(),
            polarity: None,
            position: 1,
        }],
        target,
        prior,
        conditional,
        tps,
        greedy_prior,
        greedy_conditional,
        category,
    })
}

fn distributions_for(
    ctx: &ExperimentContext,
    space: &Arc<AnswerSpace>,
    prior_bundle: &PromptBundle,
    conditional_bundle: &PromptBundle,
    mode: DistributionMode,
) -> std::result::Result<(AnswerDistribution, AnswerDistribution), BackendError> {
    let cfg = &ctx.config.backend;
    match mode {
        DistributionMode::NextToken => Ok((
            next_token_distribution(ctx.backend, prior_bundle, space, cfg)?.0,
            next_token_distribution(ctx.backend, conditional_bundle, space, cfg)?.0,
        )),
        DistributionMode::Cover => Ok((
            cover_distribution(ctx.backend, prior_bundle, space, cfg)?,
            cover_distribution(ctx.backend, conditional_bundle, space, cfg)?,
        )),
    }
}
