//! Orthonormal real Fourier transform, Fourier frequencies and periodograms.
//!
//! The transform matrix has rows
//!
//! ```text
//! e_0, c_1, s_1, c_2, s_2, ..., c_N, s_N [, e_{n/2} if n is even]
//! ```
//!
//! with `N = floor((n - 1) / 2)`, `e_j = n^{-1/2} (exp(-2 pi i j t / n))_{t=1..n}`,
//! `c_j = sqrt(2) Re e_j` and `s_j = sqrt(2) Im e_j`. Every diagonal matrix in
//! the likelihood code is laid out in this row order.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest series length with at least one interior Fourier frequency pair.
pub const MIN_SERIES_LEN: usize = 4;

/// Record of the preprocessing applied to a series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub mean_centered: bool,
    pub differenced: bool,
}

/// Ordered real observations `z_1, ..., z_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    meta: Preprocessing,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_SERIES_LEN {
            return Err(Error::invalid(format!(
                "time series needs at least {MIN_SERIES_LEN} observations, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("observation {i} is not finite")));
        }
        Ok(Self {
            values,
            meta: Preprocessing::default(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn meta(&self) -> Preprocessing {
        self.meta
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Subtracts the sample mean.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        Self {
            values: self.values.iter().map(|v| v - m).collect(),
            meta: Preprocessing {
                mean_centered: true,
                ..self.meta
            },
        }
    }

    /// First differences `z_{t+1} - z_t`; the result is one observation shorter.
    pub fn differenced(&self) -> Result<Self> {
        let values: Vec<f64> = self.values.windows(2).map(|w| w[1] - w[0]).collect();
        let mut out = Self::new(values)?;
        out.meta = Preprocessing {
            differenced: true,
            ..self.meta
        };
        Ok(out)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// The vector `F_n z` in the row order described at the module level.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    coeffs: Vec<f64>,
}

impl FourierCoefficients {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < MIN_SERIES_LEN {
            return Err(Error::invalid(format!(
                "need at least {MIN_SERIES_LEN} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("Fourier coefficients must be finite"));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }
}

/// Fourier frequencies `lambda_j = 2 pi j / n` for `j = 0..=floor(n/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    freqs: Vec<f64>,
    n: usize,
}

impl FrequencyGrid {
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Length of the series the grid belongs to.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Number of interior frequencies, `N = floor((n - 1) / 2)`.
    pub fn n_interior(&self) -> usize {
        n_interior(self.n)
    }

    /// Whether the grid ends at the Nyquist frequency `pi` (even `n`).
    pub fn has_nyquist(&self) -> bool {
        self.n % 2 == 0
    }

    /// Rescaled frequencies `lambda_j / pi` in `[0, 1]`.
    pub fn unit_freqs(&self) -> Vec<f64> {
        self.freqs.iter().map(|l| (l / PI).min(1.0)).collect()
    }
}

/// Periodogram ordinates `I_n(lambda_j)` on the Fourier grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    ordinates: Vec<f64>,
    n: usize,
}

impl Periodogram {
    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }
}

pub(crate) fn n_interior(n: usize) -> usize {
    (n - 1) / 2
}

/// Number of grid points `floor(n/2) + 1`.
pub(crate) fn grid_len(n: usize) -> usize {
    n / 2 + 1
}

/// Maps coefficient row `r` to its Fourier frequency index.
pub(crate) fn row_frequency(r: usize, n: usize) -> usize {
    if r == 0 {
        0
    } else if n % 2 == 0 && r == n - 1 {
        n / 2
    } else {
        r.div_ceil(2)
    }
}

/// Whether frequency index `j` is `0` or the Nyquist index.
pub(crate) fn is_endpoint(j: usize, n: usize) -> bool {
    j == 0 || (n % 2 == 0 && j == n / 2)
}

pub fn fourier_frequencies(n: usize) -> Result<FrequencyGrid> {
    if n < MIN_SERIES_LEN {
        return Err(Error::invalid(format!(
            "Fourier grid needs n >= {MIN_SERIES_LEN}, got {n}"
        )));
    }
    let freqs = (0..grid_len(n))
        .map(|j| 2.0 * PI * j as f64 / n as f64)
        .collect();
    Ok(FrequencyGrid { freqs, n })
}

/// FFT-backed transform for a fixed length. Holds its own plan and scratch
/// space, so repeated transforms of the same length do not allocate.
pub struct RealFourier {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `exp(-2 pi i j / n)`, shifts the FFT's `t = 0..n-1` origin to `t = 1..n`.
    phase: Vec<Complex64>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for RealFourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFourier").field("n", &self.n).finish()
    }
}

impl Clone for RealFourier {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
            phase: self.phase.clone(),
            buf: self.buf.clone(),
            scratch: self.scratch.clone(),
        }
    }
}

impl RealFourier {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_SERIES_LEN {
            return Err(Error::invalid(format!(
                "transform length must be >= {MIN_SERIES_LEN}, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let phase = (0..n)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
            .collect();
        Ok(Self {
            n,
            forward,
            inverse,
            phase,
            buf: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Writes `F_n z` into `out`.
    pub fn forward(&mut self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(z.len(), n, "input length does not match transform length");
        assert_eq!(out.len(), n, "output length does not match transform length");
        for (b, &v) in self.buf.iter_mut().zip(z) {
            *b = Complex64::new(v, 0.0);
        }
        self.forward
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let inv_sqrt_n = 1.0 / (n as f64).sqrt();
        let pair_scale = SQRT_2 * inv_sqrt_n;
        out[0] = self.buf[0].re * inv_sqrt_n;
        for j in 1..=n_interior(n) {
            let x = self.buf[j] * self.phase[j];
            out[2 * j - 1] = pair_scale * x.re;
            out[2 * j] = pair_scale * x.im;
        }
        if n % 2 == 0 {
            let x = self.buf[n / 2] * self.phase[n / 2];
            out[n - 1] = x.re * inv_sqrt_n;
        }
    }

    /// Writes `F_n^T c` into `out`.
    pub fn inverse(&mut self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(coeffs.len(), n, "input length does not match transform length");
        assert_eq!(out.len(), n, "output length does not match transform length");
        self.buf[0] = Complex64::new(coeffs[0], 0.0);
        for j in 1..=n_interior(n) {
            let h = Complex64::new(coeffs[2 * j - 1], coeffs[2 * j]) / SQRT_2;
            self.buf[j] = h * self.phase[j].conj();
            self.buf[n - j] = h.conj() * self.phase[n - j].conj();
        }
        if n % 2 == 0 {
            self.buf[n / 2] = Complex64::new(coeffs[n - 1], 0.0) * self.phase[n / 2].conj();
        }
        self.inverse
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let inv_sqrt_n = 1.0 / (n as f64).sqrt();
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re * inv_sqrt_n;
        }
    }
}

pub fn real_fourier_transform(ts: &TimeSeries) -> FourierCoefficients {
    let n = ts.len();
    let mut plan = RealFourier::new(n).expect("TimeSeries guarantees n >= 4");
    let mut coeffs = vec![0.0; n];
    plan.forward(ts.values(), &mut coeffs);
    FourierCoefficients { coeffs }
}

/// Entry `(r, t)` of `F_n` for `t = 1..=n`.
fn basis_entry(r: usize, t: usize, n: usize) -> f64 {
    let nf = n as f64;
    if r == 0 {
        return 1.0 / nf.sqrt();
    }
    if n % 2 == 0 && r == n - 1 {
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        return sign / nf.sqrt();
    }
    let j = r.div_ceil(2);
    // Reduce j*t mod n before forming the angle so large n keeps full precision.
    let angle = 2.0 * PI * ((j * t) % n) as f64 / nf;
    let scale = (2.0 / nf).sqrt();
    if r % 2 == 1 {
        scale * angle.cos()
    } else {
        -scale * angle.sin()
    }
}

/// Applies the explicit `n x n` matrix `F_n`. Quadratic cost; kept as the
/// reference route for the FFT path.
pub fn real_fourier_transform_dense(ts: &TimeSeries) -> FourierCoefficients {
    let n = ts.len();
    let z = ts.values();
    let coeffs = (0..n)
        .map(|r| {
            z.iter()
                .enumerate()
                .map(|(i, &v)| basis_entry(r, i + 1, n) * v)
                .sum()
        })
        .collect();
    FourierCoefficients { coeffs }
}

pub fn inverse_real_fourier_transform(fc: &FourierCoefficients) -> TimeSeries {
    let n = fc.n();
    let mut plan = RealFourier::new(n).expect("FourierCoefficients guarantees n >= 4");
    let mut values = vec![0.0; n];
    plan.inverse(fc.coeffs(), &mut values);
    TimeSeries {
        values,
        meta: Preprocessing::default(),
    }
}

/// `I_n(lambda) = |sum_t z_t exp(-i t lambda)|^2 / (2 pi n)` evaluated term by term.
pub fn periodogram_direct(ts: &TimeSeries) -> Periodogram {
    let n = ts.len();
    let nf = n as f64;
    let ordinates = (0..grid_len(n))
        .map(|j| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &z) in ts.values().iter().enumerate() {
                let t = i + 1;
                let angle = 2.0 * PI * ((j * t) % n) as f64 / nf;
                re += z * angle.cos();
                im -= z * angle.sin();
            }
            (re * re + im * im) / (2.0 * PI * nf)
        })
        .collect();
    Periodogram { ordinates, n }
}

pub fn periodogram_from_coeffs(fc: &FourierCoefficients) -> Periodogram {
    let c = fc.coeffs();
    let n = c.len();
    let mut ordinates = Vec::with_capacity(grid_len(n));
    ordinates.push(c[0] * c[0] / (2.0 * PI));
    for j in 1..=n_interior(n) {
        ordinates.push((c[2 * j] * c[2 * j] + c[2 * j - 1] * c[2 * j - 1]) / (4.0 * PI));
    }
    if n % 2 == 0 {
        ordinates.push(c[n - 1] * c[n - 1] / (2.0 * PI));
    }
    Periodogram { ordinates, n }
}

/// Periodogram via the FFT route.
pub fn periodogram(ts: &TimeSeries) -> Periodogram {
    periodogram_from_coeffs(&real_fourier_transform(ts))
}
