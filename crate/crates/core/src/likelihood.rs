//! Whittle likelihood and the nonparametrically corrected AR likelihood.
//!
//! For a working AR model with spectral density `f_param` and a target
//! spectral density `f`, the correction matrix is the diagonal (in the
//! Fourier basis) `C_n = diag(f / f_param)` and the corrected likelihood is
//!
//! ```text
//! p_C(z) = det(C_n)^{-1/2} p_param(F_n^T C_n^{-1/2} F_n z).
//! ```
//!
//! With eta-damping, `f = c_eta f_param^eta`, so `C_n = C_n(c_eta f_param^{eta-1})`.
//!
//! # Endpoint omission and constants
//!
//! When endpoints are omitted, the coefficients at frequency `0` and (even
//! `n`) `pi` are set to zero before the inverse transform and their diagonal
//! slots are excluded from `log det C_n`. Every omitted coordinate would
//! otherwise contribute the constant `-ln(2 pi sigma^2) / 2` of a zero
//! coordinate under the working model, so that constant is added back. With
//! this convention the white-noise working model reproduces the Whittle
//! likelihood of the used coefficients exactly, and the corrected likelihood
//! does not depend on the working innovation variance for a fixed target.
//! All other normalizing constants are kept.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::armodels::{ar_autocovariance, ar_spectral_density_grid, ArLikelihood, ArModel};
use crate::error::{Error, Result};
use crate::fourier::{
    fourier_frequencies, grid_len, is_endpoint, row_frequency, Periodogram, RealFourier,
    TimeSeries,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// What a set of per-frequency values represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralRole {
    TruePsd,
    WorkingPsd,
    Correction,
    DampedCorrection,
}

/// One value per Fourier frequency `j = 0..=floor(n/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGridValues {
    pub values: Vec<f64>,
    pub role: SpectralRole,
}

impl SpectralGridValues {
    pub fn new(values: Vec<f64>, role: SpectralRole) -> Self {
        Self { values, role }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Diagonal of `C_n` in the coefficient row order of [`crate::fourier`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionDiagonal {
    pub diag: Vec<f64>,
    pub omitted_endpoints: bool,
}

impl CorrectionDiagonal {
    /// Whether row `r` takes part in the likelihood.
    pub fn is_used(&self, r: usize) -> bool {
        let n = self.diag.len();
        !(self.omitted_endpoints && is_endpoint(row_frequency(r, n), n))
    }

    pub fn n_used(&self) -> usize {
        (0..self.diag.len()).filter(|&r| self.is_used(r)).count()
    }

    /// `log det C_n` over the used rows.
    pub fn log_det(&self) -> f64 {
        self.diag
            .iter()
            .enumerate()
            .filter(|(r, _)| self.is_used(*r))
            .map(|(_, d)| d.ln())
            .sum()
    }
}

/// Number of Fourier coefficients that enter the likelihood.
pub fn n_used_coefficients(n: usize, omit_endpoints: bool) -> usize {
    if !omit_endpoints {
        n
    } else if n % 2 == 0 {
        n - 2
    } else {
        n - 1
    }
}

fn check_grid_len(values: &[f64], n: usize) -> Result<()> {
    if values.len() != grid_len(n) {
        return Err(Error::invalid(format!(
            "expected {} grid values for n = {n}, got {}",
            grid_len(n),
            values.len()
        )));
    }
    Ok(())
}

fn check_positive_used(values: &[f64], n: usize, omit_endpoints: bool, what: &str) -> Result<()> {
    for (j, &v) in values.iter().enumerate() {
        if omit_endpoints && is_endpoint(j, n) {
            continue;
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!(
                "{what} must be positive and finite at frequency index {j}, got {v}"
            )));
        }
    }
    Ok(())
}

pub fn build_correction_diagonal(
    c_vals: &SpectralGridValues,
    n: usize,
    omit_endpoints: bool,
) -> Result<CorrectionDiagonal> {
    if n < crate::fourier::MIN_SERIES_LEN {
        return Err(Error::invalid(format!("series length must be >= 4, got {n}")));
    }
    check_grid_len(&c_vals.values, n)?;
    check_positive_used(&c_vals.values, n, omit_endpoints, "correction")?;
    let diag = (0..n)
        .map(|r| {
            let j = row_frequency(r, n);
            if omit_endpoints && is_endpoint(j, n) {
                1.0
            } else {
                c_vals.values[j]
            }
        })
        .collect();
    Ok(CorrectionDiagonal {
        diag,
        omitted_endpoints: omit_endpoints,
    })
}

/// Whittle log-likelihood
///
/// ```text
/// -1/2 sum_j m_j [ ln(4 pi^2 f(lambda_j)) + I_n(lambda_j) / f(lambda_j) ]
/// ```
///
/// with multiplicity `m_j = 2` for interior frequencies and `1` at the
/// endpoints, which are dropped when `omit_endpoints` is set. This is the
/// exact Gaussian log-density of the used Fourier coefficients with
/// variances `2 pi f(lambda_j)`.
pub fn whittle_log_likelihood(
    pg: &Periodogram,
    f_vals: &SpectralGridValues,
    omit_endpoints: bool,
) -> Result<f64> {
    let n = pg.n();
    check_grid_len(&f_vals.values, n)?;
    check_positive_used(&f_vals.values, n, omit_endpoints, "spectral density")?;
    let mut ll = 0.0;
    for (j, (&i_j, &f)) in pg.ordinates().iter().zip(&f_vals.values).enumerate() {
        let endpoint = is_endpoint(j, n);
        if omit_endpoints && endpoint {
            continue;
        }
        let m = if endpoint { 1.0 } else { 2.0 };
        ll -= 0.5 * m * ((4.0 * PI * PI * f).ln() + i_j / f);
    }
    Ok(ll)
}

/// Result of one corrected-likelihood evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedEval {
    pub log_lik: f64,
    /// Unit-variance working-model quadratic form of `F_n^T C_n^{-1/2} F_n z`.
    pub quad: f64,
    /// `log det C_n` over the used rows.
    pub log_det_correction: f64,
}

/// Reusable evaluator of the corrected likelihood for a fixed series.
///
/// The Fourier coefficients of the data are computed once; each evaluation
/// rescales them by the supplied per-frequency correction, transforms back,
/// and scores the result under the working AR model. For a white-noise
/// working model the time-domain step is skipped (Parseval).
#[derive(Debug, Clone)]
pub struct CorrectedLikelihood {
    n: usize,
    omit_endpoints: bool,
    coeffs: Vec<f64>,
    plan: RealFourier,
    scaled: Vec<f64>,
    series: Vec<f64>,
}

impl CorrectedLikelihood {
    pub fn new(ts: &TimeSeries, omit_endpoints: bool) -> Result<Self> {
        let n = ts.len();
        let mut plan = RealFourier::new(n)?;
        let mut coeffs = vec![0.0; n];
        plan.forward(ts.values(), &mut coeffs);
        if omit_endpoints {
            coeffs[0] = 0.0;
            if n % 2 == 0 {
                coeffs[n - 1] = 0.0;
            }
        }
        Ok(Self {
            n,
            omit_endpoints,
            coeffs,
            plan,
            scaled: vec![0.0; n],
            series: vec![0.0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omit_endpoints(&self) -> bool {
        self.omit_endpoints
    }

    pub fn n_used(&self) -> usize {
        n_used_coefficients(self.n, self.omit_endpoints)
    }

    /// Data coefficients `F_n z`, with omitted endpoints zeroed.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn is_used_freq(&self, j: usize) -> bool {
        !(self.omit_endpoints && is_endpoint(j, self.n))
    }

    /// Evaluates the corrected likelihood for per-frequency total correction
    /// `correction[j]` (the diagonal of `C_n` before pairing), working model
    /// `ar` and innovation variance `sigma2`. Returns `None` if a used
    /// correction value is not positive and finite.
    pub fn evaluate(
        &mut self,
        correction: &[f64],
        ar: &ArLikelihood,
        sigma2: f64,
    ) -> Option<CorrectedEval> {
        let n = self.n;
        debug_assert_eq!(correction.len(), grid_len(n));
        let mut log_det = 0.0;
        for (j, &c) in correction.iter().enumerate() {
            if !self.is_used_freq(j) {
                continue;
            }
            if !(c.is_finite() && c > 0.0) {
                return None;
            }
            let m = if is_endpoint(j, n) { 1.0 } else { 2.0 };
            log_det += m * c.ln();
        }
        for r in 0..n {
            let j = row_frequency(r, n);
            self.scaled[r] = if self.is_used_freq(j) {
                self.coeffs[r] / correction[j].sqrt()
            } else {
                0.0
            };
        }
        let quad = if ar.order() == 0 {
            self.scaled.iter().map(|v| v * v).sum()
        } else {
            self.plan.inverse(&self.scaled, &mut self.series);
            ar.quadratic_form(&self.series)
        };
        let n_used = self.n_used() as f64;
        let log_lik = -0.5 * log_det
            - 0.5 * (n_used * (LN_2PI + sigma2.ln()) + ar.log_det(n))
            - 0.5 * quad / sigma2;
        Some(CorrectedEval {
            log_lik,
            quad,
            log_det_correction: log_det,
        })
    }
}

/// Total correction `c_eta(lambda) f_param(lambda)^{eta - 1}` per frequency.
pub fn total_correction(c_eta: &[f64], f_param: &[f64], eta: f64) -> Vec<f64> {
    c_eta
        .iter()
        .zip(f_param)
        .map(|(c, f)| c * f.powf(eta - 1.0))
        .collect()
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Corrected log-likelihood of `ts` under the working model, with the
/// correction given through the eta-damped function `c_eta`.
pub fn corrected_ar_log_likelihood(
    ts: &TimeSeries,
    working: &ArModel,
    c_eta_vals: &SpectralGridValues,
    eta: f64,
    omit_endpoints: bool,
) -> Result<f64> {
    check_eta(eta)?;
    let n = ts.len();
    if n <= working.order() {
        return Err(Error::invalid(format!(
            "series length {n} must exceed AR order {}",
            working.order()
        )));
    }
    check_grid_len(&c_eta_vals.values, n)?;
    check_positive_used(&c_eta_vals.values, n, omit_endpoints, "c_eta")?;
    let grid = fourier_frequencies(n)?;
    let f_param = ar_spectral_density_grid(working, &grid);
    let correction = total_correction(&c_eta_vals.values, &f_param, eta);
    let mut engine = CorrectedLikelihood::new(ts, omit_endpoints)?;
    let ar = ArLikelihood::new(working.pacf());
    let eval = engine
        .evaluate(&correction, &ar, working.sigma2())
        .ok_or_else(|| Error::invalid("total correction is not positive at a used frequency"))?;
    if !eval.log_lik.is_finite() {
        return Err(Error::numeric("corrected log-likelihood is not finite"));
    }
    Ok(eval.log_lik)
}

/// Draws one series from the corrected likelihood: `Z` from the working
/// model (exact stationary start), then `F_n^T C_n^{1/2} F_n Z`. All
/// frequencies, endpoints included, are corrected, so `c_eta` must be
/// positive everywhere.
pub fn sample_from_corrected(
    working: &ArModel,
    c_eta_vals: &SpectralGridValues,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<TimeSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = CorrectedSampler::new(working, c_eta_vals, eta, n)?;
    Ok(sampler.draw(&mut rng))
}

/// Repeated exact draws from a corrected likelihood with fixed parameters.
#[derive(Debug, Clone)]
pub struct CorrectedSampler {
    n: usize,
    /// Cholesky factor (row-major lower triangle) of the `p x p` stationary covariance.
    chol: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    sigma: f64,
    sqrt_correction: Vec<f64>,
    plan: RealFourier,
    z: Vec<f64>,
    work: Vec<f64>,
}

impl CorrectedSampler {
    pub fn new(
        working: &ArModel,
        c_eta_vals: &SpectralGridValues,
        eta: f64,
        n: usize,
    ) -> Result<Self> {
        check_eta(eta)?;
        let p = working.order();
        if n < crate::fourier::MIN_SERIES_LEN || n <= p {
            return Err(Error::invalid(format!(
                "sample length {n} must be >= 4 and exceed the AR order {p}"
            )));
        }
        check_grid_len(&c_eta_vals.values, n)?;
        check_positive_used(&c_eta_vals.values, n, false, "c_eta")?;
        let grid = fourier_frequencies(n)?;
        let f_param = ar_spectral_density_grid(working, &grid);
        let correction = total_correction(&c_eta_vals.values, &f_param, eta);
        let sqrt_correction = (0..n)
            .map(|r| correction[row_frequency(r, n)].sqrt())
            .collect();
        let gamma = ar_autocovariance(working, p);
        let chol = cholesky_toeplitz(&gamma[..p.max(1)], p)?;
        Ok(Self {
            n,
            chol,
            coeffs: working.coeffs().as_slice().to_vec(),
            sigma: working.sigma2().sqrt(),
            sqrt_correction,
            plan: RealFourier::new(n)?,
            z: vec![0.0; n],
            work: vec![0.0; n],
        })
    }

    /// Exact draw from the working AR model.
    pub fn draw_working<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let p = self.coeffs.len();
        let mut z = vec![0.0; self.n];
        let start: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        for i in 0..p {
            z[i] = (0..=i).map(|k| self.chol[i][k] * start[k]).sum();
        }
        for t in p..self.n {
            let e: f64 = rng.sample(StandardNormal);
            z[t] = self.sigma * e
                + self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(l, a)| a * z[t - l - 1])
                    .sum::<f64>();
        }
        z
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> TimeSeries {
        let z = self.draw_working(rng);
        self.z.copy_from_slice(&z);
        self.plan.forward(&self.z, &mut self.work);
        for (w, s) in self.work.iter_mut().zip(&self.sqrt_correction) {
            *w *= s;
        }
        let mut out = vec![0.0; self.n];
        self.plan.inverse(&self.work, &mut out);
        TimeSeries::new(out).expect("corrected draw is finite")
    }
}

/// Cholesky factor of the `p x p` Toeplitz matrix built from `gamma(0..p)`.
fn cholesky_toeplitz(gamma: &[f64], p: usize) -> Result<Vec<Vec<f64>>> {
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = gamma[i - j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::numeric(
                        "stationary covariance of the working model is not positive definite",
                    ));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}
