//! Position scan for contradictory context: ten permutations per review
//! set, one per position of the single negative review, scored three ways
//! (decoded rating, basic score, distance score). Permutations more than
//! `multiplier · MAD` from the per-set median are flagged, and flags are
//! attributed to the contradictory review's position group.

use std::path::Path;

use serde::Serialize;
use tps_backend::{next_token_distribution, run_batch, BackendError};
use tps_core::{basic_tps, distance_tps, mad_outliers_with_rule, Answer};

use crate::config::LostInMiddleParams;
use crate::dataset::{load_jsonl, PermutationSetRecord};
use crate::emit::{fmt_f64, write_json, CsvFile};
use crate::error::Result;
use crate::movies::{context_bundle, prior_bundle};
use crate::run::{
    greedy_rating, results_path, scale_space, summary_path, ExperimentContext, QuarantineNote,
    RunOutcome,
};

pub const PERMUTATIONS: usize = 10;

pub const CSV_HEADERS: [&str; 8] = [
    "set_id",
    "position",
    "rating",
    "score_ordinal",
    "score_basic",
    "flagged_rating",
    "flagged_ordinal",
    "flagged_basic",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionGroup {
    First,
    Middle,
    Last,
}

/// Position of the contradictory review (1-based) to its group.
pub fn position_group(position: usize, total: usize) -> PositionGroup {
    if position == 1 {
        PositionGroup::First
    } else if position == total {
        PositionGroup::Last
    } else {
        PositionGroup::Middle
    }
}

#[derive(Default, Serialize)]
struct GroupCounts {
    first: usize,
    middle: usize,
    last: usize,
}

impl GroupCounts {
    fn add(&mut self, group: PositionGroup) {
        match group {
            PositionGroup::First => self.first += 1,
            PositionGroup::Middle => self.middle += 1,
            PositionGroup::Last => self.last += 1,
        }
    }

    fn total(&self) -> usize {
        self.first + self.middle + self.last
    }

    fn percentages(&self, permutations: usize) -> GroupPercentages {
        let pct = |count: usize| {
            if permutations == 0 {
                0.0
            } else {
                100.0 * count as f64 / permutations as f64
            }
        };
        GroupPercentages {
            first: pct(self.first),
            middle: pct(self.middle),
            last: pct(self.last),
            flagged: self.total(),
        }
    }
}

#[derive(Serialize)]
struct GroupPercentages {
    first: f64,
    middle: f64,
    last: f64,
    flagged: usize,
}

#[derive(Serialize)]
struct MetricAnomalies {
    metric: &'static str,
    #[serde(flatten)]
    percentages: GroupPercentages,
}

#[derive(Serialize)]
struct Summary {
    experiment: &'static str,
    model: String,
    sets: usize,
    scored_sets: usize,
    permutations: usize,
    anomalies: Vec<MetricAnomalies>,
    quarantined: Vec<QuarantineNote>,
}

struct PermutationRow {
    set_id: String,
    position: usize,
    rating: i64,
    ordinal: f64,
    basic: f64,
    flag_rating: bool,
    flag_ordinal: bool,
    flag_basic: bool,
}

pub fn run(dataset: &Path, out_dir: &Path, ctx: &ExperimentContext) -> Result<RunOutcome> {
    let sets: Vec<PermutationSetRecord> = load_jsonl(dataset)?;
    let params = &ctx.config.experiments.lost_in_middle;

    let processed = run_batch(&sets, ctx.max_in_flight(), ctx.cancel, |_, set| {
        process_set(set, ctx, params).map_err(|note| note)
    });

    let mut outcome = RunOutcome::default();
    let mut rows: Vec<PermutationRow> = Vec::new();
    let mut quarantines = Vec::new();
    let mut scored_sets = 0usize;
    let mut rating_counts = GroupCounts::default();
    let mut ordinal_counts = GroupCounts::default();
    let mut basic_counts = GroupCounts::default();

    for result in processed {
        match result {
            Some(Ok(set_rows)) => {
                scored_sets += 1;
                for row in &set_rows {
                    let group = position_group(row.position, PERMUTATIONS);
                    if row.flag_rating {
                        rating_counts.add(group);
                    }
                    if row.flag_ordinal {
                        ordinal_counts.add(group);
                    }
                    if row.flag_basic {
                        basic_counts.add(group);
                    }
                }
                rows.extend(set_rows);
            }
            Some(Err(note)) => quarantines.push(note),
            None => outcome.cancelled = true,
        }
    }

    let mut csv = CsvFile::new(&CSV_HEADERS)?;
    for row in &rows {
        csv.row([
            row.set_id.clone(),
            row.position.to_string(),
            row.rating.to_string(),
            fmt_f64(row.ordinal),
            fmt_f64(row.basic),
            row.flag_rating.to_string(),
            row.flag_ordinal.to_string(),
            row.flag_basic.to_string(),
        ])?;
    }
    csv.save(&results_path(out_dir))?;

    let permutations = scored_sets * PERMUTATIONS;
    outcome.rows = rows.len();
    outcome.note_quarantines(quarantines);
    write_json(
        &summary_path(out_dir),
        &Summary {
            experiment: "lost-in-middle",
            model: ctx.config.backend.model.clone(),
            sets: sets.len(),
            scored_sets,
            permutations,
            anomalies: vec![
                MetricAnomalies {
                    metric: "rating",
                    percentages: rating_counts.percentages(permutations),
                },
                MetricAnomalies {
                    metric: "basic",
                    percentages: basic_counts.percentages(permutations),
                },
                MetricAnomalies {
                    metric: "distance",
                    percentages: ordinal_counts.percentages(permutations),
                },
            ],
            quarantined: outcome.quarantined.clone(),
        },
    )?;
    Ok(outcome)
}

/// Scores all ten permutations of one set. Backend failures and
/// sentinel-valued greedy answers quarantine the whole set: the MAD rule
/// needs all ten values to be comparable.
fn process_set(
    set: &PermutationSetRecord,
    ctx: &ExperimentContext,
    params: &LostInMiddleParams,
) -> std::result::Result<Vec<PermutationRow>, QuarantineNote> {
    let backend_err = |e: &BackendError| QuarantineNote::from_error(&set.id, e);
    let cfg = &ctx.config.backend;
    let (space, scale) = scale_space(params.scale_min, params.scale_max)
        .map_err(|e| QuarantineNote {
            id: set.id.clone(),
            error: e.to_string(),
            transport: false,
        })?;
    let target = Answer::new(set.target.clone()).map_err(|e| QuarantineNote {
        id: set.id.clone(),
        error: e.to_string(),
        transport: false,
    })?;

    let prior_bundle = prior_bundle(ctx, &set.title).map_err(|e| backend_err(&e))?;
    let (prior, _) = next_token_distribution(ctx.backend, &prior_bundle, &space, cfg)
        .map_err(|e| backend_err(&e))?;

    let mut ratings = Vec::with_capacity(PERMUTATIONS);
    let mut ordinal_scores = Vec::with_capacity(PERMUTATIONS);
    let mut basic_scores = Vec::with_capacity(PERMUTATIONS);
    for position in 1..=PERMUTATIONS {
        // Positive reviews keep their order; the negative review rotates
        // through each position.
        let mut texts: Vec<&str> = set.positive_reviews.iter().map(String::as_str).collect();
        texts.insert(position - 1, set.negative_review.as_str());
        let bundle = context_bundle(ctx, &set.title, &texts).map_err(|e| backend_err(&e))?;
        let (conditional, _) = next_token_distribution(ctx.backend, &bundle, &space, cfg)
            .map_err(|e| backend_err(&e))?;

        let rating = greedy_rating(&conditional.greedy(), &scale).ok_or_else(|| QuarantineNote {
            id: set.id.clone(),
            error: format!("permutation {position}: greedy answer is out of scale"),
            transport: false,
        })?;
        let ordinal =
            distance_tps(&prior, &conditional, &target, &scale).map_err(|e| QuarantineNote {
                id: set.id.clone(),
                error: e.to_string(),
                transport: false,
            })?;
        let basic = basic_tps(&prior, &conditional, &target).map_err(|e| QuarantineNote {
            id: set.id.clone(),
            error: e.to_string(),
            transport: false,
        })?;
        ratings.push(rating as f64);
        ordinal_scores.push(ordinal.score);
        basic_scores.push(basic.score);
    }

    let detect = |values: &[f64]| {
        mad_outliers_with_rule(values, params.mad_multiplier, params.flag_when_mad_zero)
            .expect("ten values")
    };
    let rating_report = detect(&ratings);
    let ordinal_report = detect(&ordinal_scores);
    let basic_report = detect(&basic_scores);

    Ok((0..PERMUTATIONS)
        .map(|i| PermutationRow {
            set_id: set.id.clone(),
            position: i + 1,
            rating: ratings[i] as i64,
            ordinal: ordinal_scores[i],
            basic: basic_scores[i],
            flag_rating: rating_report.flags[i],
            flag_ordinal: ordinal_report.flags[i],
            flag_basic: basic_report.flags[i],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_split_first_middle_last() {
        assert_eq!(position_group(1, 10), PositionGroup::First);
        assert_eq!(position_group(10, 10), PositionGroup::Last);
        for middle in 2..=9 {
            assert_eq!(position_group(middle, 10), PositionGroup::Middle);
        }
    }

    #[test]
    fn percentages_bounded_by_one_flag_per_permutation() {
        let mut counts = GroupCounts::default();
        for _ in 0..3 {
            counts.add(PositionGroup::First);
        }
        counts.add(PositionGroup::Last);
        let pct = counts.percentages(20);
        assert!(pct.first + pct.middle + pct.last <= 100.0);
        assert_eq!(pct.flagged, 4);
    }
}
