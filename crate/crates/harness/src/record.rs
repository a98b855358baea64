//! The analysis row a QA harness produces per (query, context) pair, and
//! the greedy-answer categorization the score is compared against.

use serde::Serialize;
use tps_core::{Answer, AnswerDistribution, Outcome, TpsResult};

use crate::dataset::Polarity;

/// One context component with its position in the assembled prompt.
#[derive(Debug, Clone, Serialize)]
pub struct ContextPiece {
    pub text: String,
    pub polarity: Option<Polarity>,
    pub position: usize,
}

/// Did the context change the greedily decoded answer, and to what?
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// The conditional greedy answer is the target.
    AgreesWithContext,
    /// Unchanged from the prior greedy answer (and not the target).
    KeepsPrior,
    Other,
}

impl Category {
    pub fn name(&self) -> &'static str {
        match self {
            Category::AgreesWithContext => "agrees_with_context",
            Category::KeepsPrior => "keeps_prior",
            Category::Other => "other",
        }
    }
}

/// Exactly one category per record: agreement with the target wins, then
/// prior-keeping, then other.
pub fn categorize(
    greedy_prior: &Outcome,
    greedy_conditional: &Outcome,
    target: &Answer,
) -> Category {
    if greedy_conditional.as_answer() == Some(target) {
        Category::AgreesWithContext
    } else if greedy_conditional == greedy_prior {
        Category::KeepsPrior
    } else {
        Category::Other
    }
}

/// One fully processed row: ingestion → backend → metric.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub id: String,
    pub query: String,
    pub contexts: Vec<ContextPiece>,
    pub target: Answer,
    pub prior: AnswerDistribution,
    pub conditional: AnswerDistribution,
    pub tps: TpsResult,
    pub greedy_prior: Outcome,
    pub greedy_conditional: Outcome,
    pub category: Category,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(text: &str) -> Outcome {
        Outcome::Answer(Answer::new(text).unwrap())
    }

    #[test]
    fn category_partition_is_total_and_exclusive() {
        let target = Answer::new("T").unwrap();
        // Conditional hits the target: always agreement, even if the prior
        // already pointed there.
        assert_eq!(
            categorize(&outcome("T"), &outcome("T"), &target),
            Category::AgreesWithContext
        );
        assert_eq!(
            categorize(&outcome("A"), &outcome("T"), &target),
            Category::AgreesWithContext
        );
        // Unchanged non-target answer keeps the prior.
        assert_eq!(
            categorize(&outcome("A"), &outcome("A"), &target),
            Category::KeepsPrior
        );
        assert_eq!(
            categorize(&Outcome::Sentinel, &Outcome::Sentinel, &target),
            Category::KeepsPrior
        );
        // Anything else is other.
        assert_eq!(
            categorize(&outcome("A"), &outcome("B"), &target),
            Category::Other
        );
        assert_eq!(
            categorize(&outcome("A"), &Outcome::Sentinel, &target),
            Category::Other
        );
    }
}
