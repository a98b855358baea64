//! Cross-checks the hand-rolled Student-t tail against statrs, an
//! independent implementation, across a grid of statistics and degrees of
//! freedom.

use statrs::distribution::{ContinuousCDF, StudentsT};
use tps_core::{student_t_cdf, student_t_sf, t_test_one_sided, Tail};

#[test]
fn student_t_matches_reference_library() {
    for df in [1.0, 2.0, 3.0, 5.0, 9.0, 24.0, 99.0, 400.0] {
        let reference = StudentsT::new(0.0, 1.0, df).unwrap();
        for i in 0..=160 {
            let t = -8.0 + 0.1 * i as f64;
            let ours = student_t_cdf(t, df);
            let theirs = reference.cdf(t);
            assert!(
                (ours - theirs).abs() < 1e-10,
                "cdf mismatch at t={t}, df={df}: {ours} vs {theirs}"
            );
        }
    }
}

#[test]
fn one_sided_p_values_match_reference() {
    let samples: &[&[f64]] = &[
        &[0.1, 0.2, 0.3],
        &[1.0, 0.9, 1.4, 1.2, 0.7],
        &[-0.5, 0.2, -0.1, 0.05, -0.3, 0.4],
        &[10.0, 10.5, 9.5, 10.2],
    ];
    for values in samples {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = mean / (var.sqrt() / n.sqrt());
        let reference = StudentsT::new(0.0, 1.0, n - 1.0).unwrap();

        let greater = t_test_one_sided(values, 0.0, Tail::Greater).unwrap();
        assert!((greater.t - t).abs() < 1e-12);
        assert!((greater.p - reference.sf(t)).abs() < 1e-10);

        let less = t_test_one_sided(values, 0.0, Tail::Less).unwrap();
        assert!((less.p - reference.cdf(t)).abs() < 1e-10);
    }
}

#[test]
fn survival_function_symmetry() {
    for df in [2.0, 6.0, 11.0] {
        for i in 0..50 {
            let t = 0.17 * i as f64;
            let lhs = student_t_sf(t, df);
            let rhs = student_t_cdf(-t, df);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
