//! Persuasiveness as a function of context size: how the distance-based
//! score moves as k sampled reviews are concatenated, for uniform contexts
//! (all one polarity) and noisy contexts (a third contradictory, placed in
//! the middle).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use tps_backend::{next_token_distribution, run_batch, BackendError};
use tps_core::{distance_tps, expected_value, Answer, Error as CoreError};

use crate::config::TpsVsKParams;
use crate::dataset::{load_jsonl, MovieRecord, Polarity};
use crate::emit::{fmt_f64, write_json, CsvFile, SampledChoice};
use crate::error::Result;
use crate::movies::{context_bundle, minority_count, place_minority_in_middle, prior_bundle};
use crate::run::{
    mean, results_path, sample_std, samples_path, scale_space, summary_path, ExperimentContext,
    QuarantineNote, RunOutcome,
};
use crate::seeding::{keyed_rng, sample_indices};

pub const CSV_HEADERS: [&str; 9] = [
    "movie_id",
    "direction",
    "context_type",
    "k",
    "target",
    "score",
    "w_prior",
    "w_conditional",
    "prior_expected_value",
];

#[derive(Serialize)]
struct CurvePoint {
    context_type: String,
    k: usize,
    n: usize,
    mean_score: f64,
    std_score: f64,
}

#[derive(Serialize)]
struct Summary {
    experiment: &'static str,
    model: String,
    movies: usize,
    rows: usize,
    curve: Vec<CurvePoint>,
    quarantined: Vec<QuarantineNote>,
}

struct Row {
    movie_id: String,
    direction: Polarity,
    context_type: String,
    k: usize,
    target: String,
    score: f64,
    w_prior: f64,
    w_conditional: f64,
    prior_expected: f64,
}

struct MovieOutput {
    rows: Vec<Row>,
    samples: Vec<SampledChoice>,
    skipped: Vec<QuarantineNote>,
}

pub fn run(dataset: &Path, out_dir: &Path, ctx: &ExperimentContext) -> Result<RunOutcome> {
    let movies: Vec<MovieRecord> = load_jsonl(dataset)?;
    let params = &ctx.config.experiments.tps_vs_k;

    let processed = run_batch(&movies, ctx.max_in_flight(), ctx.cancel, |_, movie| {
        process_movie(movie, ctx, params).map_err(|e| QuarantineNote::from_error(&movie.id, &e))
    });

    let mut outcome = RunOutcome::default();
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    let mut quarantines = Vec::new();
    for result in processed {
        match result {
            Some(Ok(output)) => {
                rows.extend(output.rows);
                samples.extend(output.samples);
                quarantines.extend(output.skipped);
            }
            Some(Err(note)) => quarantines.push(note),
            None => outcome.cancelled = true,
        }
    }

    let mut csv = CsvFile::new(&CSV_HEADERS)?;
    let mut curve_data: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for row in &rows {
        curve_data
            .entry((row.context_type.clone(), row.k))
            .or_default()
            .push(row.score);
        csv.row([
            row.movie_id.clone(),
            row.direction.name().to_owned(),
            row.context_type.clone(),
            row.k.to_string(),
            row.target.clone(),
            fmt_f64(row.score),
            fmt_f64(row.w_prior),
            fmt_f64(row.w_conditional),
            fmt_f64(row.prior_expected),
        ])?;
    }
    csv.save(&results_path(out_dir))?;

    let curve = curve_data
        .into_iter()
        .map(|((context_type, k), scores)| CurvePoint {
            context_type,
            k,
            n: scores.len(),
            mean_score: mean(&scores),
            std_score: sample_std(&scores),
        })
        .collect();

    outcome.rows = rows.len();
    outcome.note_quarantines(quarantines);
    write_json(
        &summary_path(out_dir),
        &Summary {
            experiment: "tps-vs-k",
            model: ctx.config.backend.model.clone(),
            movies: movies.len(),
            rows: outcome.rows,
            curve,
            quarantined: outcome.quarantined.clone(),
        },
    )?;
    write_json(&samples_path(out_dir), &samples)?;
    Ok(outcome)
}

fn process_movie(
    movie: &MovieRecord,
    ctx: &ExperimentContext,
    params: &TpsVsKParams,
) -> std::result::Result<MovieOutput, BackendError> {
    let cfg = &ctx.config.backend;
    let (space, scale) = scale_space(params.scale_min, params.scale_max)
        .map_err(|e| BackendError::Protocol(e.to_string()))?;

    let prior_bundle = prior_bundle(ctx, &movie.title)?;
    let (prior, _) = next_token_distribution(ctx.backend, &prior_bundle, &space, cfg)?;
    let (prior_expected, _) = expected_value(&prior, &scale).map_err(BackendError::from)?;

    // High prior ratings get contradicted downward, low ones upward.
    let direction = if prior_expected > params.prior_split {
        Polarity::Negative
    } else {
        Polarity::Positive
    };
    let target_text = match direction {
        Polarity::Negative => params.scale_min.to_string(),
        Polarity::Positive => params.scale_max.to_string(),
    };
    let target = Answer::new(target_text.clone()).map_err(CoreError::from)?;

    let majority_pool = movie.indices_of(direction);
    let minority_pool = movie.indices_of(direction.opposite());

    let mut output = MovieOutput {
        rows: Vec::new(),
        samples: Vec::new(),
        skipped: Vec::new(),
    };

    let mut evaluate = |k: usize,
                        context_type: String,
                        review_indices: Vec<usize>|
     -> std::result::Result<(), BackendError> {
        let texts: Vec<&str> = review_indices
            .iter()
            .map(|&i| movie.reviews[i].text.as_str())
            .collect();
        let bundle = context_bundle(ctx, &movie.title, &texts)?;
        let (conditional, _) = next_token_distribution(ctx.backend, &bundle, &space, cfg)?;
        let result = distance_tps(&prior, &conditional, &target, &scale)?;
        output.rows.push(Row {
            movie_id: movie.id.clone(),
            direction,
            context_type,
            k,
            target: target_text.clone(),
            score: result.score,
            w_prior: result.w_prior,
            w_conditional: result.w_conditional,
            prior_expected,
        });
        Ok(())
    };

    for k in params.k_min..=params.k_max {
        let context_type = direction.name().to_owned();
        if majority_pool.len() < k {
            output.skipped.push(QuarantineNote {
                id: format!("{}/{}/k={k}", movie.id, context_type),
                error: format!(
                    "review pool has {} {} reviews, need {k}",
                    majority_pool.len(),
                    direction.name()
                ),
                transport: false,
            });
            continue;
        }
        let key = format!("tps-vs-k/{}/{}/k={k}", movie.id, context_type);
        let mut rng = keyed_rng(ctx.seed, &["tps-vs-k", &movie.id, &context_type, &k.to_string()]);
        let picked: Vec<usize> = sample_indices(&mut rng, majority_pool.len(), k)
            .into_iter()
            .map(|i| majority_pool[i])
            .collect();
        output.samples.push(SampledChoice {
            key,
            pool: majority_pool.len(),
            picked: picked.clone(),
        });
        evaluate(k, context_type, picked)?;
    }

    for k in params.noisy_k_min..=params.noisy_k_max {
        let context_type = format!("noisy-{}", direction.name());
        let m = minority_count(k);
        if majority_pool.len() < k - m || minority_pool.len() < m {
            output.skipped.push(QuarantineNote {
                id: format!("{}/{}/k={k}", movie.id, context_type),
                error: format!(
                    "review pool has {} majority and {} minority reviews, need {} and {m}",
                    majority_pool.len(),
                    minority_pool.len(),
                    k - m
                ),
                transport: false,
            });
            continue;
        }
        let mut rng = keyed_rng(ctx.seed, &["tps-vs-k", &movie.id, &context_type, &k.to_string()]);
        let majority: Vec<usize> = sample_indices(&mut rng, majority_pool.len(), k - m)
            .into_iter()
            .map(|i| majority_pool[i])
            .collect();
        let minority: Vec<usize> = sample_indices(&mut rng, minority_pool.len(), m)
            .into_iter()
            .map(|i| minority_pool[i])
            .collect();
        let arranged = place_minority_in_middle(&majority, &minority);
        output.samples.push(SampledChoice {
            key: format!("tps-vs-k/{}/{}/k={k}", movie.id, context_type),
            pool: movie.reviews.len(),
            picked: arranged.clone(),
        });
        evaluate(k, context_type, arranged)?;
    }

    Ok(output)
}
