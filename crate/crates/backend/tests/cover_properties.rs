//! Property: over a prefix-free space, a chain-rule-consistent backend can
//! never make the cover probabilities exceed 1 (+tolerance), and the
//! resulting distribution is always a valid simplex point.

use proptest::prelude::*;
use tps_backend::{
    cover_distribution, BackendConfig, FixtureRecord, PromptBundle, ReplayBackend, Request,
    Response,
};
use tps_core::{Answer, AnswerSpace};

fn consistent_fixture(
    answers: &[String],
    probs: &[f64],
    cfg: &BackendConfig,
    prompt: &str,
) -> ReplayBackend {
    let records = answers.iter().zip(probs).map(|(answer, &p)| {
        let request = Request::Score {
            model: cfg.model.clone(),
            prompt: prompt.to_owned(),
            continuation: answer.clone(),
        };
        FixtureRecord {
            key: request.key(),
            request,
            response: Response::Score {
                tokens: vec![(answer.clone(), p.max(1e-300).ln())],
            },
        }
    });
    ReplayBackend::from_records(records).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn consistent_backends_never_overflow_the_cover(
        n in 1usize..=8,
        raw in prop::collection::vec(0.0f64..1.0, 8),
        slack in 0.0f64..1.0,
    ) {
        // Allocate at most (1 - slack·ε) of the probability budget.
        let total: f64 = raw[..n].iter().sum::<f64>().max(1e-9);
        let budget = 1.0 - 0.5 * slack;
        let probs: Vec<f64> = raw[..n].iter().map(|w| w / total * budget).collect();

        let answers: Vec<String> = (0..n).map(|i| format!("ans{i:02}")).collect();
        let cfg = BackendConfig { model: "demo".into(), ..Default::default() };
        let bundle = PromptBundle::new("", None, "Q?").unwrap();
        let backend = consistent_fixture(&answers, &probs, &cfg, &bundle.render());

        let space = AnswerSpace::new(
            answers.iter().map(|a| Answer::new(a.clone()).unwrap()).collect(),
            true,
        )
        .unwrap();
        let dist = cover_distribution(&backend, &bundle, &space, &cfg).unwrap();
        let total: f64 = dist.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(dist.probs().iter().all(|&p| p >= 0.0));
        prop_assert!(dist.sentinel_mass() >= -1e-12);
    }
}
