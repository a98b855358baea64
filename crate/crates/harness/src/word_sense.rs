//! Word-sense disambiguation study: how strongly a sentence that uses a
//! word in one sense persuades the model toward each candidate sense,
//! under both the indicator cost and the embedding-distance cost.

use std::path::Path;

use serde::Serialize;
use tps_backend::{
    embed_table, next_token_distribution, render_template, run_batch, BackendError, PromptBundle,
};
use tps_core::{
    basic_tps, bonferroni, semantic_tps, t_test_one_sided, Answer, AnswerSpace, EmbeddingTable,
    Error as CoreError, Tail,
};

use crate::dataset::{load_jsonl, WordSenseRecord};
use crate::emit::{fmt_f64, write_json, CsvFile};
use crate::error::Result;
use crate::run::{mean, results_path, summary_path, ExperimentContext, QuarantineNote, RunOutcome};

pub const CSV_HEADERS: [&str; 13] = [
    "word",
    "context_sense",
    "target_sense",
    "n_contexts",
    "mean_basic_score",
    "mean_semantic_score",
    "t_basic",
    "p_basic",
    "significant_basic",
    "t_semantic",
    "p_semantic",
    "significant_semantic",
    "direction",
];

#[derive(Serialize)]
struct WordReport {
    word: String,
    /// Prior probability per sense label (answer-space order).
    prior: Vec<(String, f64)>,
    /// Pairwise cosine distances between sense definitions.
    sense_labels: Vec<String>,
    sense_distances: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Summary {
    experiment: &'static str,
    model: String,
    records: usize,
    rows: usize,
    alpha: f64,
    target_tests: TestCounts,
    nontarget_tests: TestCounts,
    words: Vec<WordReport>,
    quarantined: Vec<QuarantineNote>,
}

#[derive(Default, Serialize)]
struct TestCounts {
    total: usize,
    significant_basic: usize,
    significant_semantic: usize,
}

struct CueGroup {
    cue: String,
    /// Per target sense: scores across this cue's contexts.
    basic: Vec<Vec<f64>>,
    semantic: Vec<Vec<f64>>,
}

struct WordOutput {
    word: String,
    labels: Vec<String>,
    prior: Vec<(String, f64)>,
    distances: Vec<Vec<f64>>,
    groups: Vec<CueGroup>,
}

pub fn run(dataset: &Path, out_dir: &Path, ctx: &ExperimentContext) -> Result<RunOutcome> {
    let records: Vec<WordSenseRecord> = load_jsonl(dataset)?;
    let params = &ctx.config.experiments.word_sense;
    let file_table = if params.embeddings == "backend" {
        None
    } else {
        Some(EmbeddingTable::load_jsonl(&params.embeddings)?)
    };

    let processed = run_batch(&records, ctx.max_in_flight(), ctx.cancel, |_, record| {
        process_word(record, ctx, file_table.as_ref())
            .map_err(|e| QuarantineNote::from_error(&record.id, &e))
    });

    let mut outcome = RunOutcome::default();
    let mut csv = CsvFile::new(&CSV_HEADERS)?;
    let mut words = Vec::new();
    let mut quarantines = Vec::new();
    let mut target_tests = TestCounts::default();
    let mut nontarget_tests = TestCounts::default();

    for result in processed {
        let word = match result {
            Some(Ok(word)) => word,
            Some(Err(note)) => {
                quarantines.push(note);
                continue;
            }
            None => {
                outcome.cancelled = true;
                continue;
            }
        };
        for group in &word.groups {
            // One-sided t-tests for the four target instantiations of this
            // cue, Bonferroni-corrected together.
            let mut tests = Vec::new();
            for (t_idx, label) in word.labels.iter().enumerate() {
                let tail = if *label == group.cue {
                    Tail::Greater
                } else {
                    Tail::Less
                };
                let basic = t_test_one_sided(&group.basic[t_idx], 0.0, tail).ok();
                let semantic = t_test_one_sided(&group.semantic[t_idx], 0.0, tail).ok();
                tests.push((label.clone(), tail, basic, semantic));
            }
            let p_basic: Vec<f64> = tests
                .iter()
                .map(|(_, _, b, _)| b.map_or(1.0, |t| t.p))
                .collect();
            let p_semantic: Vec<f64> = tests
                .iter()
                .map(|(_, _, _, s)| s.map_or(1.0, |t| t.p))
                .collect();
            let sig_basic = bonferroni(&p_basic, params.alpha);
            let sig_semantic = bonferroni(&p_semantic, params.alpha);

            for (t_idx, (label, tail, basic, semantic)) in tests.iter().enumerate() {
                let counts = if *label == group.cue {
                    &mut target_tests
                } else {
                    &mut nontarget_tests
                };
                counts.total += 1;
                counts.significant_basic += usize::from(sig_basic[t_idx]);
                counts.significant_semantic += usize::from(sig_semantic[t_idx]);

                csv.row([
                    word.word.clone(),
                    group.cue.clone(),
                    label.clone(),
                    group.basic[t_idx].len().to_string(),
                    fmt_f64(mean(&group.basic[t_idx])),
                    fmt_f64(mean(&group.semantic[t_idx])),
                    basic.map(|t| fmt_f64(t.t)).unwrap_or_default(),
                    basic.map(|t| fmt_f64(t.p)).unwrap_or_default(),
                    sig_basic[t_idx].to_string(),
                    semantic.map(|t| fmt_f64(t.t)).unwrap_or_default(),
                    semantic.map(|t| fmt_f64(t.p)).unwrap_or_default(),
                    sig_semantic[t_idx].to_string(),
                    match tail {
                        Tail::Greater => "greater".to_owned(),
                        Tail::Less => "less".to_owned(),
                    },
                ])?;
                outcome.rows += 1;
            }
        }
        words.push(WordReport {
            word: word.word,
            prior: word.prior,
            sense_labels: word.labels,
            sense_distances: word.distances,
        });
    }
    csv.save(&results_path(out_dir))?;

    outcome.note_quarantines(quarantines);
    write_json(
        &summary_path(out_dir),
        &Summary {
            experiment: "word-sense",
            model: ctx.config.backend.model.clone(),
            records: records.len(),
            rows: outcome.rows,
            alpha: params.alpha,
            target_tests,
            nontarget_tests,
            words,
            quarantined: outcome.quarantined.clone(),
        },
    )?;
    Ok(outcome)
}

fn process_word(
    record: &WordSenseRecord,
    ctx: &ExperimentContext,
    file_table: Option<&EmbeddingTable>,
) -> std::result::Result<WordOutput, BackendError> {
    let cfg = &ctx.config.backend;
    let labels: Vec<String> = record.senses.iter().map(|s| s.label.clone()).collect();
    let answers = labels
        .iter()
        .map(|l| Answer::new(l.clone()))
        .collect::<tps_core::Result<Vec<_>>>()?;
    let space = AnswerSpace::new(answers, true)?;

    // Embeddings keyed by sense label; vectors come from the definitions.
    let table = match file_table {
        Some(table) => {
            let entries = record
                .senses
                .iter()
                .map(|s| {
                    table
                        .get(&s.definition)
                        .map(|v| (s.label.clone(), v.to_vec()))
                        .ok_or_else(|| CoreError::MissingVector(s.definition.clone()))
                })
                .collect::<tps_core::Result<Vec<_>>>()?;
            EmbeddingTable::new(entries)?
        }
        None => {
            let definitions: Vec<String> =
                record.senses.iter().map(|s| s.definition.clone()).collect();
            let raw = embed_table(ctx.backend, &definitions, cfg)?;
            let entries = record
                .senses
                .iter()
                .map(|s| {
                    raw.get(&s.definition)
                        .map(|v| (s.label.clone(), v.to_vec()))
                        .ok_or_else(|| CoreError::MissingVector(s.definition.clone()))
                })
                .collect::<tps_core::Result<Vec<_>>>()?;
            EmbeddingTable::new(entries)?
        }
    };

    let substitutions: Vec<(String, String)> = std::iter::once(("entity".to_owned(), record.word.clone()))
        .chain(record.senses.iter().map(|s| {
            (format!("definition {}", s.label), s.definition.clone())
        }))
        .collect();
    let subs: Vec<(&str, &str)> = substitutions
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_str()))
        .collect();

    let prior_query = render_template(ctx.config.prompts.word_sense_prior(), &subs);
    let prior_bundle =
        PromptBundle::new(ctx.config.prompts.instructions.clone(), None, prior_query)?;
    let (prior, _) = next_token_distribution(ctx.backend, &prior_bundle, &space, cfg)?;

    let mut groups: Vec<CueGroup> = labels
        .iter()
        .map(|cue| CueGroup {
            cue: cue.clone(),
            basic: vec![Vec::new(); labels.len()],
            semantic: vec![Vec::new(); labels.len()],
        })
        .collect();

    for context in &record.contexts {
        let mut context_subs = subs.clone();
        context_subs.push(("context sentence", &context.text));
        let query = render_template(ctx.config.prompts.word_sense_context(), &context_subs);
        let bundle = PromptBundle::new(ctx.config.prompts.instructions.clone(), None, query)?;
        let (conditional, _) = next_token_distribution(ctx.backend, &bundle, &space, cfg)?;

        let group = groups
            .iter_mut()
            .find(|g| g.cue == context.sense)
            .expect("validated cue");
        for (t_idx, label) in labels.iter().enumerate() {
            let target = Answer::new(label.clone()).map_err(CoreError::from)?;
            let basic = basic_tps(&prior, &conditional, &target)?;
            let semantic = semantic_tps(&prior, &conditional, &target, &table)?;
            group.basic[t_idx].push(basic.score);
            group.semantic[t_idx].push(semantic.score);
        }
    }
    groups.retain(|g| g.basic.iter().any(|v| !v.is_empty()));

    // Pairwise cosine distances between sense definitions (the cost matrix
    // restricted to sense pairs), for the heatmap.
    let cost = tps_core::semantic_cost(&space, &table)?;
    let distances: Vec<Vec<f64>> = (0..labels.len())
        .map(|i| (0..labels.len()).map(|j| cost.cost(i, j)).collect())
        .collect();

    let prior_pairs = labels
        .iter()
        .map(|l| (l.clone(), prior.prob_text(l)))
        .collect();

    Ok(WordOutput {
        word: record.word.clone(),
        labels,
        prior: prior_pairs,
        distances,
        groups,
    })
}
