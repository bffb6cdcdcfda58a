//! Checks against independent reference computations: a dense Cholesky
//! evaluation of the Gaussian likelihood with autocovariances from the
//! causal MA(infinity) expansion, and Monte Carlo moments of the corrected
//! model.

use nalgebra::{DMatrix, DVector};
use npc_core::armodels::{ar_log_likelihood, pacf_to_ar, ArModel, PacfVector};
use npc_core::fourier::{fourier_frequencies, real_fourier_transform, TimeSeries};
use npc_core::likelihood::{
    corrected_ar_log_likelihood, CorrectedSampler, SpectralGridValues, SpectralRole,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// `gamma(h) = sigma2 sum_j psi_j psi_{j+h}` with `psi` from the AR recursion.
fn psi_autocovariance(a: &[f64], sigma2: f64, max_lag: usize) -> Vec<f64> {
    let terms = 20_000;
    let mut psi = vec![0.0; terms + max_lag];
    psi[0] = 1.0;
    for j in 1..psi.len() {
        psi[j] = a
            .iter()
            .enumerate()
            .filter(|(l, _)| *l < j)
            .map(|(l, c)| c * psi[j - l - 1])
            .sum();
    }
    (0..=max_lag)
        .map(|h| sigma2 * (0..terms).map(|j| psi[j] * psi[j + h]).sum::<f64>())
        .collect()
}

fn dense_gaussian_loglik(z: &[f64], gamma: &[f64]) -> f64 {
    let n = z.len();
    let cov = DMatrix::from_fn(n, n, |i, j| gamma[i.abs_diff(j)]);
    let chol = cov.cholesky().expect("positive definite");
    let l = chol.l();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let x = chol.solve(&DVector::from_column_slice(z));
    let quad = DVector::from_column_slice(z).dot(&x);
    -0.5 * (n as f64 * (2.0 * PI).ln() + log_det + quad)
}

#[test]
fn corrected_with_unit_correction_matches_dense_likelihood() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..30 {
        let p = rng.random_range(0..=5usize);
        let n = rng.random_range(16..=96usize);
        let rho: Vec<f64> = (0..p).map(|_| rng.random_range(-0.8..0.8)).collect();
        let sigma2 = rng.random_range(0.3..3.0);
        let model = ArModel::from_pacf(PacfVector::new(rho.clone()).unwrap(), sigma2).unwrap();
        let a = pacf_to_ar(&rho).unwrap();
        let gamma = psi_autocovariance(a.as_slice(), sigma2, n);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ts = TimeSeries::new(z.clone()).unwrap();
        let reference = dense_gaussian_loglik(&z, &gamma);
        let exact = ar_log_likelihood(&ts, &model).unwrap();
        let c = SpectralGridValues::new(vec![1.0; n / 2 + 1], SpectralRole::DampedCorrection);
        let corrected = corrected_ar_log_likelihood(&ts, &model, &c, 1.0, false).unwrap();
        assert!((exact - reference).abs() < 1e-8, "case {case}: {exact} vs {reference}");
        assert!((corrected - reference).abs() < 1e-8, "case {case}: {corrected} vs {reference}");
    }
}

/// With total correction `r(lambda)`, the Fourier coefficients of a draw are
/// independent with variance `r(lambda_j) (F Gamma F^T)_{jj}`; at `eta = 1`
/// they are uncorrelated only asymptotically, so the test compares the full
/// covariance `D^{1/2} F Gamma F^T D^{1/2}` with its Monte Carlo estimate.
#[test]
fn corrected_draws_have_transformed_covariance() {
    let n = 16;
    let rho = vec![0.5];
    let model = ArModel::from_pacf(PacfVector::new(rho.clone()).unwrap(), 1.0).unwrap();
    let grid = fourier_frequencies(n).unwrap();
    let c: Vec<f64> = grid.freqs().iter().map(|l| 1.0 + 0.5 * l.cos()).collect();
    let cvals = SpectralGridValues::new(c.clone(), SpectralRole::DampedCorrection);
    let mut sampler = CorrectedSampler::new(&model, &cvals, 1.0, n).unwrap();

    let gamma = psi_autocovariance(&[0.5], 1.0, n);
    let mut f = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let fc = real_fourier_transform(&TimeSeries::new(e).unwrap());
        for row in 0..n {
            f[(row, col)] = fc.coeffs()[row];
        }
    }
    let cov = DMatrix::from_fn(n, n, |i, j| gamma[i.abs_diff(j)]);
    let row_freq = |r: usize| if r == 0 { 0 } else if r == n - 1 { n / 2 } else { r.div_ceil(2) };
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { c[row_freq(i)].sqrt() } else { 0.0 });
    let target = &d * &f * cov * f.transpose() * &d;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 40_000;
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut mean = DVector::<f64>::zeros(n);
    for _ in 0..draws {
        let x = sampler.draw(&mut rng);
        let y = DVector::from_column_slice(real_fourier_transform(&x).coeffs());
        acc += &y * y.transpose();
        mean += y;
    }
    acc /= draws as f64;
    mean /= draws as f64;
    for i in 0..n {
        assert!(mean[i].abs() < 5.0 * (target[(i, i)] / draws as f64).sqrt(), "mean {i}");
        for j in 0..n {
            let se = ((target[(i, i)] * target[(j, j)] + target[(i, j)].powi(2)) / draws as f64).sqrt();
            assert!(
                (acc[(i, j)] - target[(i, j)]).abs() < 5.0 * se,
                "cov ({i},{j}): {} vs {}",
                acc[(i, j)],
                target[(i, j)]
            );
        }
    }
}
