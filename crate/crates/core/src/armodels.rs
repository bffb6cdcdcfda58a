//! Autoregressive working models parametrized by partial autocorrelations.
//!
//! The map between partial autocorrelations `rho` and AR coefficients `a` is
//! the Durbin-Levinson recursion
//!
//! ```text
//! phi_{k,k} = rho_k
//! phi_{k,l} = phi_{k-1,l} - rho_k phi_{k-1,k-l},   l < k
//! a_l       = phi_{p,l}
//! ```
//!
//! so `|rho_l| < 1` for all `l` is exactly the causality condition on `a`.
//! The same triangle of `phi` coefficients drives the exact Gaussian
//! likelihood: the one-step prediction errors of a causal AR process are
//! independent with variances `v_t = gamma(0) prod_{k<=t} (1 - rho_k^2)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{FrequencyGrid, TimeSeries};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Partial autocorrelations `(rho_1, ..., rho_p)`, each strictly inside `(-1, 1)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PacfVector(Vec<f64>);

impl PacfVector {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if let Some((l, r)) = rho
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_finite() || r.abs() >= 1.0)
        {
            return Err(Error::invalid(format!(
                "partial autocorrelation rho_{} = {r} is outside (-1, 1)",
                l + 1
            )));
        }
        Ok(Self(rho))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for PacfVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PacfVector> for Vec<f64> {
    fn from(p: PacfVector) -> Self {
        p.0
    }
}

/// Causal AR coefficients `(a_1, ..., a_p)` of `Z_t = sum_l a_l Z_{t-l} + e_t`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArCoefficients(Vec<f64>);

impl ArCoefficients {
    /// Accepts only coefficients whose polynomial `1 - a_1 z - ... - a_p z^p`
    /// has no roots in the closed unit disc.
    pub fn new(a: Vec<f64>) -> Result<Self> {
        ar_to_pacf(&a)?;
        Ok(Self(a))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }
}

/// Durbin-Levinson triangle: row `k` holds `phi_{k,1..=k}`.
fn levinson_triangle(rho: &[f64]) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(rho.len() + 1);
    rows.push(Vec::new());
    for (k0, &r) in rho.iter().enumerate() {
        let k = k0 + 1;
        let prev = &rows[k - 1];
        let mut row = Vec::with_capacity(k);
        for l in 1..k {
            row.push(prev[l - 1] - r * prev[k - l - 1]);
        }
        row.push(r);
        rows.push(row);
    }
    rows
}

pub fn pacf_to_ar(rho: &[f64]) -> Result<ArCoefficients> {
    let pacf = PacfVector::new(rho.to_vec())?;
    let rows = levinson_triangle(pacf.as_slice());
    Ok(ArCoefficients(rows.last().cloned().unwrap_or_default()))
}

/// Inverse of [`pacf_to_ar`]: steps the recursion down from order `p`.
/// Fails when `a` is not causal.
pub fn ar_to_pacf(a: &[f64]) -> Result<PacfVector> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("AR coefficients must be finite"));
    }
    let p = a.len();
    let mut rho = vec![0.0; p];
    let mut phi = a.to_vec();
    for k in (1..=p).rev() {
        let r = phi[k - 1];
        if r.abs() >= 1.0 {
            return Err(Error::invalid(format!(
                "AR coefficients {a:?} are not causal (|rho_{k}| = {} >= 1)",
                r.abs()
            )));
        }
        rho[k - 1] = r;
        let denom = 1.0 - r * r;
        let next: Vec<f64> = (1..k)
            .map(|l| (phi[l - 1] + r * phi[k - l - 1]) / denom)
            .collect();
        phi = next;
    }
    PacfVector::new(rho)
}

/// AR(p) working model with innovation variance `sigma2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pacf: PacfVector,
    sigma2: f64,
    coeffs: ArCoefficients,
}

impl ArModel {
    pub fn from_pacf(pacf: PacfVector, sigma2: f64) -> Result<Self> {
        check_variance(sigma2)?;
        let coeffs = ArCoefficients(
            levinson_triangle(pacf.as_slice())
                .pop()
                .unwrap_or_default(),
        );
        Ok(Self {
            pacf,
            sigma2,
            coeffs,
        })
    }

    pub fn from_coeffs(a: &[f64], sigma2: f64) -> Result<Self> {
        let pacf = ar_to_pacf(a)?;
        Self::from_pacf(pacf, sigma2)
    }

    pub fn white_noise(sigma2: f64) -> Result<Self> {
        Self::from_pacf(PacfVector::default(), sigma2)
    }

    pub fn order(&self) -> usize {
        self.pacf.order()
    }

    pub fn pacf(&self) -> &PacfVector {
        &self.pacf
    }

    pub fn coeffs(&self) -> &ArCoefficients {
        &self.coeffs
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        check_variance(sigma2)?;
        Ok(Self {
            sigma2,
            ..self.clone()
        })
    }
}

fn check_variance(sigma2: f64) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::invalid(format!(
            "innovation variance must be positive and finite, got {sigma2}"
        )));
    }
    Ok(())
}

/// `|1 - sum_l a_l exp(-i l lambda)|^2`.
fn ar_transfer_sq(a: &[f64], lambda: f64) -> f64 {
    let mut z = Complex64::new(1.0, 0.0);
    for (l, &al) in a.iter().enumerate() {
        z -= Complex64::from_polar(al, -((l + 1) as f64) * lambda);
    }
    z.norm_sqr()
}

/// `(sigma2 / 2 pi) |1 - sum_l a_l exp(-i l lambda)|^{-2}`.
pub fn ar_spectral_density(model: &ArModel, lambda: f64) -> f64 {
    model.sigma2 / (2.0 * PI * ar_transfer_sq(model.coeffs.as_slice(), lambda))
}

pub fn ar_spectral_density_grid(model: &ArModel, grid: &FrequencyGrid) -> Vec<f64> {
    grid.freqs()
        .iter()
        .map(|&l| ar_spectral_density(model, l))
        .collect()
}

/// Stationary autocovariances `gamma(0..=max_lag)`.
///
/// Autocorrelations up to lag `p` come from running Durbin-Levinson
/// backwards from the partial autocorrelations; higher lags follow the AR
/// difference equation.
pub fn ar_autocovariance(model: &ArModel, max_lag: usize) -> Vec<f64> {
    let rho = model.pacf.as_slice();
    let p = rho.len();
    let rows = levinson_triangle(rho);
    let mut r = vec![0.0; max_lag.max(p) + 1];
    r[0] = 1.0;
    for k in 1..=p {
        let prev = &rows[k - 1];
        let mut pred = 0.0;
        let mut explained = 0.0;
        for l in 1..k {
            pred += prev[l - 1] * r[k - l];
            explained += prev[l - 1] * r[l];
        }
        r[k] = pred + rho[k - 1] * (1.0 - explained);
    }
    let a = model.coeffs.as_slice();
    for h in (p + 1)..r.len() {
        r[h] = a.iter().enumerate().map(|(l, al)| al * r[h - l - 1]).sum();
    }
    let gamma0 = model.sigma2 / rho.iter().map(|x| 1.0 - x * x).product::<f64>();
    r.truncate(max_lag + 1);
    r.into_iter().map(|x| x * gamma0).collect()
}

/// Exact Gaussian likelihood of a causal AR(p) with unit innovation variance,
/// factored through one-step prediction errors. Scaling to another
/// innovation variance only rescales the quadratic form, which is what the
/// conjugate variance updates exploit.
#[derive(Debug, Clone)]
pub struct ArLikelihood {
    /// `phi_{t, 1..=t}` for `t = 0..=p`.
    rows: Vec<Vec<f64>>,
    /// Prediction-error variances `v_0..v_p` for unit innovation variance.
    pred_var: Vec<f64>,
    /// `sum_{t=0}^{p-1} ln v_t`, the log-determinant of the unit-variance `Sigma_p`.
    log_det_sigma_p: f64,
}

impl ArLikelihood {
    pub fn new(pacf: &PacfVector) -> Self {
        let rho = pacf.as_slice();
        let rows = levinson_triangle(rho);
        let p = rho.len();
        let mut pred_var = vec![0.0; p + 1];
        // v_p = 1; walk back up.
        pred_var[p] = 1.0;
        for t in (0..p).rev() {
            pred_var[t] = pred_var[t + 1] / (1.0 - rho[t] * rho[t]);
        }
        let log_det_sigma_p = pred_var[..p].iter().map(|v| v.ln()).sum();
        Self {
            rows,
            pred_var,
            log_det_sigma_p,
        }
    }

    pub fn order(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.rows[self.order()]
    }

    /// `z^T Gamma_n^{-1} z` for the unit-variance autocovariance matrix `Gamma_n`.
    pub fn quadratic_form(&self, z: &[f64]) -> f64 {
        let p = self.order();
        let mut q = 0.0;
        for t in 0..z.len() {
            let k = t.min(p);
            let phi = &self.rows[k];
            let mut e = z[t];
            for (l, c) in phi.iter().enumerate() {
                e -= c * z[t - l - 1];
            }
            q += e * e / self.pred_var[k];
        }
        q
    }

    /// Log-determinant of the unit-variance `n x n` covariance matrix.
    pub fn log_det(&self, n: usize) -> f64 {
        let p = self.order();
        if n >= p {
            self.log_det_sigma_p
        } else {
            self.pred_var[..n].iter().map(|v| v.ln()).sum()
        }
    }

    /// Log-density at `z` for innovation variance `sigma2`, all constants included.
    pub fn log_density(&self, z: &[f64], sigma2: f64) -> f64 {
        let n = z.len() as f64;
        -0.5 * (n * (LN_2PI + sigma2.ln()) + self.log_det(z.len()))
            - 0.5 * self.quadratic_form(z) / sigma2
    }
}

/// Exact Gaussian log-likelihood of `ts` under `model`:
/// the stationary density of the first `p` values times the conditional
/// normal densities of the remaining `n - p` prediction errors.
pub fn ar_log_likelihood(ts: &TimeSeries, model: &ArModel) -> Result<f64> {
    if ts.len() <= model.order() {
        return Err(Error::invalid(format!(
            "series length {} must exceed AR order {}",
            ts.len(),
            model.order()
        )));
    }
    let lik = ArLikelihood::new(&model.pacf);
    let value = lik.log_density(ts.values(), model.sigma2);
    if !value.is_finite() {
        return Err(Error::numeric("AR log-likelihood is not finite"));
    }
    Ok(value)
}

/// Sample autocovariances of the mean-centered series with denominator `n`.
pub fn sample_autocovariance(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|h| {
            centered[..n - h]
                .iter()
                .zip(&centered[h..])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

/// Partial autocorrelations from autocovariances `gamma(0..=p)` via Durbin-Levinson.
fn levinson_pacf(gamma: &[f64]) -> Result<Vec<f64>> {
    let p = gamma.len() - 1;
    let mut rho = Vec::with_capacity(p);
    let mut phi: Vec<f64> = Vec::new();
    let mut v = gamma[0];
    for k in 1..=p {
        let num = gamma[k] - phi.iter().enumerate().map(|(l, c)| c * gamma[k - l - 1]).sum::<f64>();
        let r = num / v;
        if !r.is_finite() || r.abs() >= 1.0 {
            return Err(Error::numeric(format!(
                "Yule-Walker recursion broke down at lag {k} (rho = {r})"
            )));
        }
        let mut next: Vec<f64> = (1..k).map(|l| phi[l - 1] - r * phi[k - l - 1]).collect();
        next.push(r);
        phi = next;
        v *= 1.0 - r * r;
        rho.push(r);
    }
    Ok(rho)
}

/// Yule-Walker estimate of order `p` from the mean-centered sample
/// autocovariances; `sigma2 = gamma(0) - sum_l a_l gamma(l)`.
pub fn yule_walker_fit(ts: &TimeSeries, p: usize) -> Result<ArModel> {
    if ts.len() <= p {
        return Err(Error::invalid(format!(
            "series length {} must exceed AR order {p}",
            ts.len()
        )));
    }
    let gamma = sample_autocovariance(ts.values(), p);
    if gamma[0] <= 0.0 || !gamma[0].is_finite() {
        return Err(Error::invalid(
            "series is constant; Yule-Walker estimate is undefined",
        ));
    }
    let rho = levinson_pacf(&gamma)?;
    let sigma2 = gamma[0] * rho.iter().map(|r| 1.0 - r * r).product::<f64>();
    ArModel::from_pacf(PacfVector::new(rho)?, sigma2)
}

/// Data-generating ARMA model
/// `Z_t = sum_i a_i Z_{t-i} + sum_j b_j e_{t-j} + e_t` with standard normal `e_t`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmaSpec {
    #[serde(default)]
    pub ar: Vec<f64>,
    #[serde(default)]
    pub ma: Vec<f64>,
}

impl ArmaSpec {
    pub fn new(ar: Vec<f64>, ma: Vec<f64>) -> Result<Self> {
        let spec = Self { ar, ma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ma.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("MA coefficients must be finite"));
        }
        ar_to_pacf(&self.ar).map(|_| ())
    }

    /// Spectral density for unit innovation variance.
    pub fn spectral_density(&self, lambda: f64) -> f64 {
        let mut ma = Complex64::new(1.0, 0.0);
        for (j, &b) in self.ma.iter().enumerate() {
            ma += Complex64::from_polar(b, -((j + 1) as f64) * lambda);
        }
        ma.norm_sqr() / (2.0 * PI * ar_transfer_sq(&self.ar, lambda))
    }

    pub fn spectral_density_grid(&self, grid: &FrequencyGrid) -> Vec<f64> {
        grid.freqs()
            .iter()
            .map(|&l| self.spectral_density(l))
            .collect()
    }

    pub fn burn_in(&self) -> usize {
        1000.max(10 * (self.ar.len() + self.ma.len()))
    }
}

/// Simulates `n` observations after discarding [`ArmaSpec::burn_in`] values
/// started from zero. Innovations come from ChaCha8 seeded with `seed`.
pub fn simulate_arma(spec: &ArmaSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    spec.validate()?;
    if n < crate::fourier::MIN_SERIES_LEN {
        return Err(Error::invalid(format!("series length must be >= 4, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = spec.burn_in();
    let total = burn + n;
    let q = spec.ma.len();
    let p = spec.ar.len();
    let e: Vec<f64> = (0..total + q).map(|_| rng.sample(StandardNormal)).collect();
    let mut z = vec![0.0; total];
    for t in 0..total {
        // e is offset by q so that e_{t-j} exists for t < q.
        let mut v = e[t + q];
        for (j, b) in spec.ma.iter().enumerate() {
            v += b * e[t + q - j - 1];
        }
        for i in 0..p.min(t) {
            v += spec.ar[i] * z[t - i - 1];
        }
        z[t] = v;
    }
    TimeSeries::new(z.split_off(burn))
}
