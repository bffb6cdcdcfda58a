//! Goodness-of-fit statistics used to check samplers against known targets.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One-sample Kolmogorov–Smirnov statistic `D` against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the Kolmogorov–Smirnov test, with the usual
/// small-sample correction `(sqrt(n) + 0.12 + 0.11 / sqrt(n)) D`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_survival(lambda)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_p_value(ks_statistic(sample, cdf), sample.len())
}

/// Pearson chi-square test of observed counts against expected
/// probabilities. Cells with expected count below `min_expected` are pooled
/// into one cell. Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_test(observed: &[u64], probs: &[f64], min_expected: f64) -> (f64, usize, f64) {
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * total;
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled_exp > 0.0 {
        cells.push((pooled_obs, pooled_exp));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len().saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(stat);
    (stat, df, p)
}

/// Total-variation distance between two discrete distributions given as
/// weights (normalized internally).
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    0.5 * a.iter().zip(b).map(|(x, y)| (x / sa - y / sb).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_reference_values() {
        // Tabulated critical values of the limiting distribution.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_test(&x, |v| v.clamp(0.0, 1.0)) > 0.01);
        let shifted: Vec<f64> = x.iter().map(|v| v * 0.9).collect();
        assert!(ks_test(&shifted, |v| v.clamp(0.0, 1.0)) < 1e-6);
    }

    #[test]
    fn chi_square_examples() {
        let (stat, df, p) = chi_square_test(&[50, 50], &[0.5, 0.5], 5.0);
        assert_eq!(stat, 0.0);
        assert_eq!(df, 1);
        assert!((p - 1.0).abs() < 1e-12);
        // (60-50)^2/50 * 2 = 4, df 1: p = 0.0455.
        let (stat, _, p) = chi_square_test(&[60, 40], &[0.5, 0.5], 5.0);
        assert!((stat - 4.0).abs() < 1e-12);
        assert!((p - 0.045_500_263_896_358_4).abs() < 1e-9);
    }

    #[test]
    fn tv_distance() {
        assert_eq!(total_variation(&[1.0, 1.0], &[2.0, 2.0]), 0.0);
        assert!((total_variation(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
