//! Statistics used by the experiment harnesses: MAD outlier detection,
//! Spearman rank correlation, a one-sided one-sample t-test, Bonferroni
//! flags, and RMSE.

use serde::Serialize;

use crate::error::{Error, Result};

/// Result of the `k·MAD`-from-the-median outlier rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierReport {
    pub median: f64,
    pub mad: f64,
    pub threshold_multiplier: f64,
    pub flags: Vec<bool>,
}

impl OutlierReport {
    pub fn any(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("values must not be NaN"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Flags values more than `multiplier · MAD` from the median. No
/// normal-consistency constant is applied; the rule is the raw one.
///
/// When the MAD degenerates to 0, `flag_when_mad_zero` decides whether any
/// value differing from the median is flagged (true) or nothing is (false).
pub fn mad_outliers_with_rule(
    values: &[f64],
    multiplier: f64,
    flag_when_mad_zero: bool,
) -> Result<OutlierReport> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let median = median_of(values.to_vec());
    let deviations: Vec<f64> = values.iter().map(|x| (x - median).abs()).collect();
    let mad = median_of(deviations.clone());
    let flags = if mad > 0.0 {
        deviations.iter().map(|&d| d > multiplier * mad).collect()
    } else if flag_when_mad_zero {
        values.iter().map(|&x| x != median).collect()
    } else {
        vec![false; values.len()]
    };
    Ok(OutlierReport {
        median,
        mad,
        threshold_multiplier: multiplier,
        flags,
    })
}

/// [`mad_outliers_with_rule`] with the degenerate rule enabled.
pub fn mad_outliers(values: &[f64], multiplier: f64) -> Result<OutlierReport> {
    mad_outliers_with_rule(values, multiplier, true)
}

/// Average ranks (1-based); tied values share the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN rank input"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::ZeroRankVariance);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Spearman correlation: Pearson correlation of average-ranked data.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            got: xs.len(),
        });
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Which tail of the t distribution a one-sided test reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

/// One-sample one-sided t-test of `mean(values)` against `mu0`.
pub fn t_test_one_sided(values: &[f64], mu0: f64, tail: Tail) -> Result<TTest> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientSample { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let variance = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    if variance <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = (mean - mu0) / (variance.sqrt() / nf.sqrt());
    let df = nf - 1.0;
    let p = match tail {
        Tail::Greater => student_t_sf(t, df),
        Tail::Less => student_t_cdf(t, df),
    };
    Ok(TTest { t, p, df })
}

/// Per-index significance flags: `p_i < alpha / n`.
pub fn bonferroni(p_values: &[f64], alpha: f64) -> Vec<bool> {
    debug_assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    let corrected = alpha / p_values.len().max(1) as f64;
    p_values.iter().map(|&p| p < corrected).collect()
}

/// Root mean squared error between two equal-length sequences.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mse = predicted
        .iter()
        .zip(actual)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / predicted.len() as f64;
    Ok(mse.sqrt())
}

/// Survival function `P(T > t)` of Student's t with `df` degrees of
/// freedom, via the regularized incomplete beta function. Exactly 0.5 at
/// `t = 0`.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let ib = betainc(0.5 * df, 0.5, x);
    if t >= 0.0 {
        0.5 * ib
    } else {
        1.0 - 0.5 * ib
    }
}

/// CDF `P(T ≤ t)` of Student's t.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    1.0 - student_t_sf(t, df)
}

// Lanczos approximation (g = 7, 9 terms).
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    let z = z - 1.0;
    let mut x = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Regularized incomplete beta `I_x(a, b)` by continued fraction.
fn betainc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    const EPS: f64 = 1e-12;
    const MAX_ITER: usize = 300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mad_flags_planted_outlier() {
        let report = mad_outliers(&[1.0, 2.0, 3.0, 4.0, 100.0], 3.0).unwrap();
        assert_eq!(report.median, 3.0);
        assert_eq!(report.mad, 1.0);
        assert_eq!(report.flags, vec![false, false, false, false, true]);
    }

    #[test]
    fn mad_constant_sequence_flags_nothing() {
        let report = mad_outliers(&[5.0, 5.0, 5.0, 5.0], 3.0).unwrap();
        assert_eq!(report.mad, 0.0);
        assert!(!report.any());
    }

    #[test]
    fn mad_degenerate_rule_flags_deviation() {
        let report = mad_outliers(&[0.0, 0.0, 0.0, 0.0, 1.0], 3.0).unwrap();
        assert_eq!(report.mad, 0.0);
        assert_eq!(report.flags, vec![false, false, false, false, true]);

        let off = mad_outliers_with_rule(&[0.0, 0.0, 0.0, 0.0, 1.0], 3.0, false).unwrap();
        assert!(!off.any());
    }

    #[test]
    fn mad_rejects_empty() {
        assert!(matches!(mad_outliers(&[], 3.0), Err(Error::EmptyInput)));
    }

    #[test]
    fn spearman_monotone_and_reversed() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn spearman_partial_agreement() {
        // Rank formula 1 − 6Σd²/(n(n²−1)) with d² = 4 gives 0.6.
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((rho - 0.6).abs() < 1e-12);
    }

    #[test]
    fn spearman_handles_ties_with_mean_ranks() {
        let ranks = average_ranks(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn spearman_errors() {
        assert!(matches!(
            spearman(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroRankVariance)
        ));
    }

    #[test]
    fn t_test_hand_computation() {
        // mean 0.2, s 0.1: t = 0.2 / (0.1/√3) = 2√3 ≈ 3.4641.
        let result = t_test_one_sided(&[0.1, 0.2, 0.3], 0.0, Tail::Greater).unwrap();
        assert!((result.t - 3.4641).abs() < 1e-3);
        assert!(result.p < 0.05);
    }

    #[test]
    fn t_test_at_mean_is_half() {
        let result = t_test_one_sided(&[0.1, 0.3], 0.2, Tail::Greater).unwrap();
        assert_eq!(result.t, 0.0);
        assert_eq!(result.p, 0.5);
    }

    #[test]
    fn t_test_tails_complement() {
        let values = [0.4, 0.1, 0.25, 0.3];
        let greater = t_test_one_sided(&values, 0.2, Tail::Greater).unwrap();
        let less = t_test_one_sided(&values, 0.2, Tail::Less).unwrap();
        assert!((greater.p + less.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t_test_errors() {
        assert!(matches!(
            t_test_one_sided(&[1.0], 0.0, Tail::Greater),
            Err(Error::InsufficientSample { .. })
        ));
        assert!(matches!(
            t_test_one_sided(&[2.0, 2.0, 2.0], 0.0, Tail::Greater),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn student_t_cdf_is_exact_at_zero() {
        for df in [1.0, 2.0, 5.0, 30.0] {
            assert_eq!(student_t_cdf(0.0, df), 0.5);
            assert_eq!(student_t_sf(0.0, df), 0.5);
        }
    }

    #[test]
    fn student_t_sf_monotone_decreasing() {
        let df = 7.0;
        let mut last = 1.0;
        for i in 0..50 {
            let t = -5.0 + 0.2 * i as f64;
            let sf = student_t_sf(t, df);
            assert!(sf <= last + 1e-15);
            last = sf;
        }
    }

    #[test]
    fn bonferroni_cases() {
        assert_eq!(bonferroni(&[0.001, 0.02], 0.01), vec![true, false]);
        assert_eq!(bonferroni(&[0.009], 0.01), vec![true]);
        assert_eq!(bonferroni(&[1.0, 1.0, 1.0], 0.05), vec![false, false, false]);
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0], &[3.0]).unwrap(), 3.0);
        let value = rmse(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
        assert!((value - 2.5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            rmse(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn mad_affine_invariance() {
        let base = [1.0, 2.0, 3.0, 4.0, 100.0];
        let shifted: Vec<f64> = base.iter().map(|x| 3.5 * x + 11.0).collect();
        let a = mad_outliers(&base, 3.0).unwrap();
        let b = mad_outliers(&shifted, 3.0).unwrap();
        assert_eq!(a.flags, b.flags);
        assert!((b.mad - 3.5 * a.mad).abs() < 1e-9);
    }
}
