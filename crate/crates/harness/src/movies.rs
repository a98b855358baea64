//! Shared pieces of the movie-rating experiments: prompt assembly from
//! review lists and the deterministic middle placement of contradictory
//! reviews.

use tps_backend::{render_template, BackendError, PromptBundle};

use crate::run::ExperimentContext;

/// "Review 1: ... Review 2: ..." joined with single spaces.
pub fn render_reviews(reviews: &[&str]) -> String {
    reviews
        .iter()
        .enumerate()
        .map(|(i, text)| format!("Review {}: {}", i + 1, text))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn prior_bundle(
    ctx: &ExperimentContext,
    title: &str,
) -> std::result::Result<PromptBundle, BackendError> {
    let query = render_template(
        ctx.config.prompts.movie_review_prior(),
        &[("entity", title)],
    );
    PromptBundle::new(ctx.config.prompts.instructions.clone(), None, query)
}

pub fn context_bundle(
    ctx: &ExperimentContext,
    title: &str,
    reviews: &[&str],
) -> std::result::Result<PromptBundle, BackendError> {
    let rendered = render_reviews(reviews);
    let query = render_template(
        ctx.config.prompts.movie_review_context(),
        &[("reviews", rendered.as_str()), ("entity", title)],
    );
    PromptBundle::new(ctx.config.prompts.instructions.clone(), None, query)
}

/// Minority reviews in a noisy context of size k: ⌊k/3⌋, at least one.
pub fn minority_count(k: usize) -> usize {
    (k / 3).max(1)
}

/// Interleaves a minority block into the majority order, as one contiguous
/// run centered at position ⌈k/2⌉ (1-indexed). Majority items keep their
/// relative order around the block.
pub fn place_minority_in_middle<T: Clone>(majority: &[T], minority: &[T]) -> Vec<T> {
    let k = majority.len() + minority.len();
    let m = minority.len();
    if m == 0 {
        return majority.to_vec();
    }
    let center = k.div_ceil(2);
    let start = center.saturating_sub((m - 1) / 2).max(1);
    let start = start.min(k - m + 1); // keep the block inside 1..=k
    let mut out = Vec::with_capacity(k);
    let mut majority_iter = majority.iter();
    for position in 1..=k {
        if position >= start && position < start + m {
            out.push(minority[position - start].clone());
        } else {
            out.push(majority_iter.next().expect("count mismatch").clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn review_rendering_numbers_from_one() {
        let rendered = render_reviews(&["Good.", "Bad."]);
        assert_eq!(rendered, "Review 1: Good. Review 2: Bad.");
    }

    #[test]
    fn minority_counts() {
        assert_eq!(minority_count(4), 1);
        assert_eq!(minority_count(5), 1);
        assert_eq!(minority_count(6), 2);
        assert_eq!(minority_count(10), 3);
    }

    #[test]
    fn single_minority_sits_in_the_middle() {
        let majority = ["a", "b", "c"];
        let minority = ["X"];
        // k=4: center at position 2.
        assert_eq!(
            place_minority_in_middle(&majority, &minority),
            vec!["a", "X", "b", "c"]
        );
    }

    #[test]
    fn minority_block_is_contiguous_and_centered() {
        let majority = ["a", "b", "c", "d", "e", "f", "g"];
        let minority = ["X", "Y", "Z"];
        // k=10: center 5, block at 4..=6.
        assert_eq!(
            place_minority_in_middle(&majority, &minority),
            vec!["a", "b", "c", "X", "Y", "Z", "d", "e", "f", "g"]
        );
    }

    #[test]
    fn majority_keeps_relative_order() {
        let majority = [1, 2, 3, 4];
        let minority = [100, 200];
        let placed = place_minority_in_middle(&majority, &minority);
        let kept: Vec<i32> = placed.iter().copied().filter(|x| *x < 100).collect();
        assert_eq!(kept, vec![1, 2, 3, 4]);
        assert_eq!(placed.len(), 6);
    }
}
