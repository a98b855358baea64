//! Property suites for the metric invariants: the basic closed form,
//! antisymmetry under swapping prior and conditional, null contexts,
//! greedy-argmax rescaling invariance, and rank-statistic invariances.

use std::sync::Arc;

use proptest::prelude::*;
use tps_core::{
    basic_tps, distance_tps, expected_value, spearman, tps, validate_plan, wasserstein, Answer,
    AnswerDistribution, AnswerSpace, CostMatrix, ResidualMode, ScaleMap, TpsInput,
};

fn space_of(n: usize) -> Arc<AnswerSpace> {
    AnswerSpace::new(
        (0..n).map(|i| Answer::new(format!("a{i:02}")).unwrap()).collect(),
        false,
    )
    .unwrap()
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter("positive total", |w| {
        w.iter().sum::<f64>() > 1e-3
    })
}

fn dist(space: &Arc<AnswerSpace>, w: &[f64]) -> AnswerDistribution {
    let pairs: Vec<(String, f64)> = space
        .answers()
        .iter()
        .zip(w)
        .map(|(a, &x)| (a.text().to_owned(), x))
        .collect();
    AnswerDistribution::build(space, pairs, ResidualMode::Renormalize).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn basic_score_is_probability_difference(
        n in 2usize..=20,
        wp in weights(20),
        wq in weights(20),
        target_pick in 0usize..20,
    ) {
        let space = space_of(n);
        let prior = dist(&space, &wp[..n]);
        let conditional = dist(&space, &wq[..n]);
        let target = space.answers()[target_pick % n].clone();
        let result = basic_tps(&prior, &conditional, &target).unwrap();
        let expected = conditional.prob_text(target.text()) - prior.prob_text(target.text());
        prop_assert!((result.score - expected).abs() <= 1e-9);
        prop_assert!(result.score >= -1.0 - 1e-12 && result.score <= 1.0 + 1e-12);
    }

    #[test]
    fn tps_is_antisymmetric_under_swap(
        n in 2usize..=8,
        wp in weights(8),
        wq in weights(8),
        ws in weights(8),
        costs in prop::collection::vec(0.0f64..4.0, 64),
    ) {
        let space = space_of(n);
        let p = dist(&space, &wp[..n]);
        let q = dist(&space, &wq[..n]);
        let sigma = dist(&space, &ws[..n]);
        let cost = CostMatrix::from_entries(
            Arc::clone(&space),
            (0..n * n).map(|k| costs[k]).collect(),
        )
        .unwrap();
        let forward = tps(&TpsInput {
            prior: p.clone(),
            conditional: q.clone(),
            target: sigma.clone(),
            cost: cost.clone(),
        })
        .unwrap();
        let backward = tps(&TpsInput {
            prior: q,
            conditional: p,
            target: sigma,
            cost,
        })
        .unwrap();
        prop_assert!((forward.score + backward.score).abs() <= 1e-9);
    }

    #[test]
    fn null_context_scores_zero(
        n in 2usize..=8,
        wp in weights(8),
        ws in weights(8),
        costs in prop::collection::vec(0.0f64..4.0, 64),
    ) {
        let space = space_of(n);
        let p = dist(&space, &wp[..n]);
        let sigma = dist(&space, &ws[..n]);
        let cost = CostMatrix::from_entries(
            Arc::clone(&space),
            (0..n * n).map(|k| costs[k]).collect(),
        )
        .unwrap();
        let result = tps(&TpsInput {
            prior: p.clone(),
            conditional: p,
            target: sigma,
            cost,
        })
        .unwrap();
        prop_assert_eq!(result.score, 0.0);
    }

    #[test]
    fn point_mass_score_bounded_by_max_cost(
        n in 2usize..=8,
        wp in weights(8),
        wq in weights(8),
        target_pick in 0usize..8,
        costs in prop::collection::vec(0.0f64..4.0, 64),
    ) {
        let space = space_of(n);
        let prior = dist(&space, &wp[..n]);
        let conditional = dist(&space, &wq[..n]);
        let target = space.outcome(target_pick % n);
        let sigma = AnswerDistribution::point_mass(&space, &target).unwrap();
        let cost = CostMatrix::from_entries(
            Arc::clone(&space),
            (0..n * n).map(|k| costs[k]).collect(),
        )
        .unwrap();
        let result = tps(&TpsInput {
            prior,
            conditional,
            target: sigma,
            cost: cost.clone(),
        })
        .unwrap();
        prop_assert!(result.score.abs() <= cost.max_entry() + 1e-12);
    }

    #[test]
    fn greedy_invariant_under_positive_rescaling(
        n in 1usize..=10,
        w in weights(10),
        factor in 0.01f64..100.0,
    ) {
        let space = space_of(n);
        let original = dist(&space, &w[..n]);
        let rescaled_weights: Vec<f64> = w[..n].iter().map(|x| x * factor).collect();
        let rescaled = dist(&space, &rescaled_weights);
        prop_assert_eq!(original.greedy(), rescaled.greedy());
    }

    #[test]
    fn expected_value_is_linear_in_probabilities(
        n in 2usize..=9,
        wp in weights(9),
        wq in weights(9),
        alpha in 0.0f64..1.0,
    ) {
        let space = AnswerSpace::new(
            (0..n).map(|i| Answer::new(i.to_string()).unwrap()).collect(),
            false,
        )
        .unwrap();
        let scale = ScaleMap::integer_range(0, n as i64 - 1).unwrap();
        let p = dist(&space, &wp[..n]);
        let q = dist(&space, &wq[..n]);
        let mixed: Vec<f64> = p
            .probs()
            .iter()
            .zip(q.probs())
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        let mixture = AnswerDistribution::from_probs(Arc::clone(&space), mixed).unwrap();
        let ev_mix = expected_value(&mixture, &scale).unwrap().0;
        let ev_blend = alpha * expected_value(&p, &scale).unwrap().0
            + (1.0 - alpha) * expected_value(&q, &scale).unwrap().0;
        prop_assert!((ev_mix - ev_blend).abs() <= 1e-9);
    }

    #[test]
    fn distance_tps_matches_expected_cost_difference(
        n in 2usize..=10,
        wp in weights(10),
        wq in weights(10),
        target_pick in 0usize..10,
    ) {
        let space = AnswerSpace::new(
            (0..n).map(|i| Answer::new(i.to_string()).unwrap()).collect(),
            false,
        )
        .unwrap();
        let scale = ScaleMap::integer_range(0, n as i64 - 1).unwrap();
        let prior = dist(&space, &wp[..n]);
        let conditional = dist(&space, &wq[..n]);
        let target = space.answers()[target_pick % n].clone();
        let result = distance_tps(&prior, &conditional, &target, &scale).unwrap();

        // Independent oracle: difference of expected normalized distances.
        let t = scale.numeric(&target).unwrap();
        let expect = |d: &AnswerDistribution| {
            d.probs()
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let v = scale.numeric(&space.answers()[i]).unwrap();
                    p * (v - t).abs() as f64 / scale.span() as f64
                })
                .sum::<f64>()
        };
        let expected = expect(&prior) - expect(&conditional);
        prop_assert!((result.score - expected).abs() <= 1e-9);
    }

    #[test]
    fn solver_plans_always_validate(
        n in 2usize..=8,
        wp in weights(8),
        wq in weights(8),
        costs in prop::collection::vec(0.0f64..4.0, 64),
    ) {
        let space = space_of(n);
        let p = dist(&space, &wp[..n]);
        let q = dist(&space, &wq[..n]);
        let cost = CostMatrix::from_entries(
            Arc::clone(&space),
            (0..n * n).map(|k| costs[k]).collect(),
        )
        .unwrap();
        let result = wasserstein(&p, &q, &cost).unwrap();
        prop_assert!(result.value >= 0.0);
        prop_assert!(validate_plan(&result.plan, &p, &q).unwrap().is_ok());
        prop_assert!((result.plan.total_cost(&cost) - result.value).abs() <= 1e-9);
    }

    #[test]
    fn spearman_invariant_under_monotone_transform(
        xs in prop::collection::vec(-100.0f64..100.0, 3..20),
        ys_seed in prop::collection::vec(-100.0f64..100.0, 20),
    ) {
        let ys = &ys_seed[..xs.len()];
        let base = spearman(&xs, ys);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let stretched: Vec<f64> = xs.iter().map(|x| (x / 50.0).exp()).collect();
        let transformed = spearman(&stretched, ys).unwrap();
        prop_assert!((base - transformed).abs() <= 1e-9);
    }
}
