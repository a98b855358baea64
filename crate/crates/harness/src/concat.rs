//! Concatenated versus individual reviews: the distance score of a k-review
//! context against the mean score of its component reviews taken alone,
//! with a least-squares slope per context group.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use tps_backend::{next_token_distribution, run_batch, BackendError};
use tps_core::{distance_tps, Answer, AnswerDistribution, Error as CoreError};

use crate::config::ConcatParams;
use crate::dataset::{load_jsonl, MovieRecord, Polarity};
use crate::emit::{fmt_f64, regression_slope, write_json, CsvFile, SampledChoice};
use crate::error::Result;
use crate::movies::{context_bundle, minority_count, place_minority_in_middle, prior_bundle};
use crate::run::{
    results_path, samples_path, scale_space, summary_path, ExperimentContext, QuarantineNote,
    RunOutcome,
};
use crate::seeding::{keyed_rng, sample_indices};

pub const CSV_HEADERS: [&str; 7] = [
    "movie_id",
    "context_type",
    "k",
    "target",
    "concat_score",
    "mean_individual_score",
    "n_reviews",
];

#[derive(Serialize)]
struct GroupSlope {
    context_type: String,
    n: usize,
    slope: Option<f64>,
}

#[derive(Serialize)]
struct Summary {
    experiment: &'static str,
    model: String,
    movies: usize,
    rows: usize,
    slopes: Vec<GroupSlope>,
    quarantined: Vec<QuarantineNote>,
}

struct Row {
    movie_id: String,
    context_type: String,
    k: usize,
    target: String,
    concat_score: f64,
    mean_individual: f64,
}

struct MovieOutput {
    rows: Vec<Row>,
    samples: Vec<SampledChoice>,
    skipped: Vec<QuarantineNote>,
}

pub fn run(dataset: &Path, out_dir: &Path, ctx: &ExperimentContext) -> Result<RunOutcome> {
    let movies: Vec<MovieRecord> = load_jsonl(dataset)?;
    let params = &ctx.config.experiments.concat_vs_individual;

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
    let mut points: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &rows {
        points
            .entry(row.context_type.clone())
            .or_default()
            .push((row.mean_individual, row.concat_score));
        csv.row([
            row.movie_id.clone(),
            row.context_type.clone(),
            row.k.to_string(),
            row.target.clone(),
            fmt_f64(row.concat_score),
            fmt_f64(row.mean_individual),
            row.k.to_string(),
        ])?;
    }
    csv.save(&results_path(out_dir))?;

    // Per-group slopes plus the pure/noisy pools.
    let mut slopes = Vec::new();
    let mut pure: Vec<(f64, f64)> = Vec::new();
    let mut noisy: Vec<(f64, f64)> = Vec::new();
    for (context_type, group_points) in &points {
        if context_type.starts_with("noisy") {
            noisy.extend(group_points.iter().copied());
        } else {
            pure.extend(group_points.iter().copied());
        }
        slopes.push(GroupSlope {
            context_type: context_type.clone(),
            n: group_points.len(),
            slope: regression_slope(group_points),
        });
    }
    slopes.push(GroupSlope {
        context_type: "pure".into(),
        n: pure.len(),
        slope: regression_slope(&pure),
    });
    slopes.push(GroupSlope {
        context_type: "noisy".into(),
        n: noisy.len(),
        slope: regression_slope(&noisy),
    });

    outcome.rows = rows.len();
    outcome.note_quarantines(quarantines);
    write_json(
        &summary_path(out_dir),
        &Summary {
            experiment: "concat-vs-individual",
            model: ctx.config.backend.model.clone(),
            movies: movies.len(),
            rows: outcome.rows,
            slopes,
            quarantined: outcome.quarantined.clone(),
        },
    )?;
    write_json(&samples_path(out_dir), &samples)?;
    Ok(outcome)
}

fn process_movie(
    movie: &MovieRecord,
    ctx: &ExperimentContext,
    params: &ConcatParams,
) -> std::result::Result<MovieOutput, BackendError> {
    let cfg = &ctx.config.backend;
    let (space, scale) = scale_space(params.scale_min, params.scale_max)
        .map_err(|e| BackendError::Protocol(e.to_string()))?;
    let prior_bundle = prior_bundle(ctx, &movie.title)?;
    let (prior, _) = next_token_distribution(ctx.backend, &prior_bundle, &space, cfg)?;

    let mut output = MovieOutput {
        rows: Vec::new(),
        samples: Vec::new(),
        skipped: Vec::new(),
    };

    let score_context = |review_indices: &[usize],
                         target: &Answer|
     -> std::result::Result<f64, BackendError> {
        let texts: Vec<&str> = review_indices
            .iter()
            .map(|&i| movie.reviews[i].text.as_str())
            .collect();
        let bundle = context_bundle(ctx, &movie.title, &texts)?;
        let (conditional, _): (AnswerDistribution, _) =
            next_token_distribution(ctx.backend, &bundle, &space, cfg)?;
        Ok(distance_tps(&prior, &conditional, target, &scale)?.score)
    };

    for majority in [Polarity::Positive, Polarity::Negative] {
        let target_text = match majority {
            Polarity::Positive => params.scale_max.to_string(),
            Polarity::Negative => params.scale_min.to_string(),
        };
        let target = Answer::new(target_text.clone()).map_err(CoreError::from)?;
        let majority_pool = movie.indices_of(majority);
        let minority_pool = movie.indices_of(majority.opposite());

        for noisy in [false, true] {
            let context_type = if noisy {
                format!("noisy-{}", majority.name())
            } else {
                majority.name().to_owned()
            };
            for k in params.k_min..=params.k_max {
                let m = if noisy { minority_count(k) } else { 0 };
                if majority_pool.len() < k - m || minority_pool.len() < m {
                    output.skipped.push(QuarantineNote {
                        id: format!("{}/{}/k={k}", movie.id, context_type),
                        error: "insufficient review pool".into(),
                        transport: false,
                    });
                    continue;
                }
                let mut rng = keyed_rng(
                    ctx.seed,
                    &["concat", &movie.id, &context_type, &k.to_string()],
                );
                let majority_picked: Vec<usize> =
                    sample_indices(&mut rng, majority_pool.len(), k - m)
                        .into_iter()
                        .map(|i| majority_pool[i])
                        .collect();
                let arranged = if m > 0 {
                    let minority_picked: Vec<usize> =
                        sample_indices(&mut rng, minority_pool.len(), m)
                            .into_iter()
                            .map(|i| minority_pool[i])
                            .collect();
                    place_minority_in_middle(&majority_picked, &minority_picked)
                } else {
                    majority_picked
                };
                output.samples.push(SampledChoice {
                    key: format!("concat/{}/{}/k={k}", movie.id, context_type),
                    pool: movie.reviews.len(),
                    picked: arranged.clone(),
                });

                let concat_score = score_context(&arranged, &target)?;
                let mut individual = Vec::with_capacity(arranged.len());
                for &index in &arranged {
                    individual.push(score_context(&[index], &target)?);
                }
                output.rows.push(Row {
                    movie_id: movie.id.clone(),
                    context_type: context_type.clone(),
                    k,
                    target: target_text.clone(),
                    concat_score,
                    mean_individual: individual.iter().sum::<f64>() / individual.len() as f64,
                });
            }
        }
    }
    Ok(output)
}
