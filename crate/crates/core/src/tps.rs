//! The targeted persuasion score: how far a context moves a model's answer
//! distribution toward a target, measured as the drop in Wasserstein
//! distance to that target.
//!
//! `score = W(prior, target) − W(conditional, target)`: positive when the
//! context pulls the model toward the target, negative when it pushes away.

use serde::{Deserialize, Serialize};

use crate::cost::{basic_cost, ordinal_cost, semantic_cost, CostMatrix, EmbeddingTable};
use crate::error::{Error, Result};
use crate::space::{same_space, Answer, AnswerDistribution, Outcome, ScaleMap};
use crate::transport::{wasserstein, wasserstein_to_point_mass};

/// Which cost family produced a score. Travels with the result so emitted
/// records are self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Basic,
    Ordinal,
    Semantic,
    Custom,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::Ordinal => "ordinal",
            Variant::Semantic => "semantic",
            Variant::Custom => "custom",
        }
    }
}

/// Inputs to the score: three distributions over one space plus a cost.
#[derive(Debug, Clone)]
pub struct TpsInput {
    pub prior: AnswerDistribution,
    pub conditional: AnswerDistribution,
    pub target: AnswerDistribution,
    pub cost: CostMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpsResult {
    pub score: f64,
    pub w_prior: f64,
    pub w_conditional: f64,
    pub variant: Variant,
}

fn check_input(input: &TpsInput) -> Result<()> {
    let space = input.prior.space();
    if !same_space(space, input.conditional.space())
        || !same_space(space, input.target.space())
        || !same_space(space, input.cost.space())
    {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

fn tps_with_variant(input: &TpsInput, variant: Variant) -> Result<TpsResult> {
    check_input(input)?;
    let (w_prior, w_conditional) = match input.target.point_mass_index() {
        Some(idx) => {
            let outcome = input.target.space().outcome(idx);
            (
                wasserstein_to_point_mass(&input.prior, &outcome, &input.cost)?.value,
                wasserstein_to_point_mass(&input.conditional, &outcome, &input.cost)?.value,
            )
        }
        None => (
            wasserstein(&input.prior, &input.target, &input.cost)?.value,
            wasserstein(&input.conditional, &input.target, &input.cost)?.value,
        ),
    };
    Ok(TpsResult {
        score: w_prior - w_conditional,
        w_prior,
        w_conditional,
        variant,
    })
}

/// The score under an arbitrary target distribution and cost matrix.
/// Point-mass targets take the closed-form fast path.
pub fn tps(input: &TpsInput) -> Result<TpsResult> {
    tps_with_variant(input, Variant::Custom)
}

fn point_target(
    prior: &AnswerDistribution,
    target: &Answer,
) -> Result<AnswerDistribution> {
    AnswerDistribution::point_mass(prior.space(), &Outcome::Answer(target.clone()))
}

/// Indicator-cost score toward a single distinguished answer. Reduces to
/// the change in the target answer's probability,
/// `conditional(target) − prior(target)`, and so lies in `[-1, 1]`.
pub fn basic_tps(
    prior: &AnswerDistribution,
    conditional: &AnswerDistribution,
    target: &Answer,
) -> Result<TpsResult> {
    let input = TpsInput {
        prior: prior.clone(),
        conditional: conditional.clone(),
        target: point_target(prior, target)?,
        cost: basic_cost(prior.space(), target)?,
    };
    tps_with_variant(&input, Variant::Basic)
}

/// Ordinal-cost score toward a single scale answer. For a point-mass target
/// this is the difference of expected normalized distances to the target.
pub fn distance_tps(
    prior: &AnswerDistribution,
    conditional: &AnswerDistribution,
    target: &Answer,
    scale: &ScaleMap,
) -> Result<TpsResult> {
    let input = TpsInput {
        prior: prior.clone(),
        conditional: conditional.clone(),
        target: point_target(prior, target)?,
        cost: ordinal_cost(prior.space(), scale)?,
    };
    tps_with_variant(&input, Variant::Ordinal)
}

/// Cosine-cost score toward a single answer with embedded representations.
pub fn semantic_tps(
    prior: &AnswerDistribution,
    conditional: &AnswerDistribution,
    target: &Answer,
    table: &EmbeddingTable,
) -> Result<TpsResult> {
    let input = TpsInput {
        prior: prior.clone(),
        conditional: conditional.clone(),
        target: point_target(prior, target)?,
        cost: semantic_cost(prior.space(), table)?,
    };
    tps_with_variant(&input, Variant::Semantic)
}
