//! Posterior summaries of sampled spectral densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{is_endpoint, FrequencyGrid};
use crate::likelihood::SpectralGridValues;

/// Posterior draws of a spectral density on a Fourier grid, one row per draw.
///
/// Values are positive at interior frequencies. At `0` and `pi` a draw may
/// vanish, since those frequencies are not informed by the data when
/// endpoints are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSpectra {
    pub grid: FrequencyGrid,
    pub samples: Vec<Vec<f64>>,
}

impl PosteriorSpectra {
    pub fn new(grid: FrequencyGrid, samples: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.n();
        for (i, row) in samples.iter().enumerate() {
            if row.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "sample {i} has {} values, grid has {}",
                    row.len(),
                    grid.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                let ok = if is_endpoint(j, n) {
                    v.is_finite() && v >= 0.0
                } else {
                    v.is_finite() && v > 0.0
                };
                if !ok {
                    return Err(Error::invalid(format!(
                        "sample {i} has invalid value {v} at frequency index {j}"
                    )));
                }
            }
        }
        Ok(Self { grid, samples })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|row| row[j]).collect()
    }

    fn ensure_nonempty(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::invalid("posterior spectra contain no samples"));
        }
        Ok(())
    }
}

/// Median of a slice; mean of the two middle values for even length.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Type-7 (linear interpolation) empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let m = sorted.len();
    let h = (m - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn posterior_median_psd(ps: &PosteriorSpectra) -> Result<Vec<f64>> {
    ps.ensure_nonempty()?;
    Ok((0..ps.grid.len()).map(|j| median(&ps.column(j))).collect())
}

/// `ln(x + xi) - xi / (x + xi)`.
pub fn fuller_log(x: f64, xi: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("Fuller logarithm needs x >= 0, got {x}")));
    }
    if !(xi >= 0.0) || (x == 0.0 && xi == 0.0) {
        return Err(Error::invalid("Fuller logarithm needs x + xi > 0"));
    }
    Ok(fuller_log_unchecked(x, xi))
}

fn fuller_log_unchecked(x: f64, xi: f64) -> f64 {
    let s = x + xi;
    s.ln() - xi / s
}

/// Inverse of the Fuller logarithm on `x >= 0` by bisection. Values below
/// `fuller_log(0, xi)` have no preimage and map to `0`.
pub fn fuller_log_inverse(y: f64, xi: f64) -> f64 {
    let (lo, hi) = fuller_log_bracket(y, xi);
    0.5 * (lo + hi)
}

/// Bisection bracket `(lo, hi)` of the preimage of `y`, with
/// `fuller_log(lo) < y <= fuller_log(hi)` and relative width below `1e-13`.
/// Band endpoints use the outer end so that rounding never shrinks the band.
fn fuller_log_bracket(y: f64, xi: f64) -> (f64, f64) {
    if y <= fuller_log_unchecked(0.0, xi) {
        return (0.0, 0.0);
    }
    let mut lo = 0.0;
    let mut hi = (y + 1.0).exp();
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if fuller_log_unchecked(mid, xi) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    Pointwise,
    Uniform,
}

/// Credible band over the grid. `alpha` is the excluded posterior mass, so
/// the nominal coverage is `1 - alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleBand {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
    pub kind: BandKind,
    pub c_star: Option<f64>,
    /// Frequencies the band is defined on; elsewhere it collapses to the median.
    pub included: Vec<bool>,
    /// Included frequencies with zero posterior spread. The band collapses
    /// to the median there and they are left out of the maximum statistic.
    pub degenerate: Vec<usize>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Frequencies where every draw is positive.
pub fn positive_mask(ps: &PosteriorSpectra) -> Vec<bool> {
    (0..ps.grid.len())
        .map(|j| ps.samples.iter().all(|row| row[j] > 0.0))
        .collect()
}

/// Interior frequencies of the grid.
pub fn interior_mask(grid: &FrequencyGrid) -> Vec<bool> {
    (0..grid.len()).map(|j| !is_endpoint(j, grid.n())).collect()
}

pub fn uniform_credible_band(ps: &PosteriorSpectra, alpha: f64, xi: f64) -> Result<CredibleBand> {
    let mask = positive_mask(ps);
    uniform_credible_band_masked(ps, alpha, xi, &mask)
}

/// Uniform band restricted to the frequencies flagged in `mask`.
///
/// On the Fuller-log scale the band is `g* +- C* s*`, with `g*` the
/// pointwise median, `s*` the (unscaled) median absolute deviation and `C*`
/// the `ceil((1 - alpha) N)`-th smallest of the per-draw maxima of
/// `|g_i - g*| / s*`.
pub fn uniform_credible_band_masked(
    ps: &PosteriorSpectra,
    alpha: f64,
    xi: f64,
    mask: &[bool],
) -> Result<CredibleBand> {
    ps.ensure_nonempty()?;
    check_alpha(alpha)?;
    if !(xi > 0.0) {
        return Err(Error::invalid(format!("xi must be positive, got {xi}")));
    }
    let m = ps.grid.len();
    if mask.len() != m {
        return Err(Error::invalid("mask length does not match the grid"));
    }
    let transformed: Vec<Vec<f64>> = ps
        .samples
        .iter()
        .map(|row| row.iter().map(|&v| fuller_log_unchecked(v, xi)).collect())
        .collect();
    let mut center = vec![0.0; m];
    let mut spread = vec![0.0; m];
    for j in 0..m {
        let col: Vec<f64> = transformed.iter().map(|row| row[j]).collect();
        center[j] = median(&col);
        let dev: Vec<f64> = col.iter().map(|g| (g - center[j]).abs()).collect();
        spread[j] = median(&dev);
    }
    let degenerate: Vec<usize> = (0..m).filter(|&j| mask[j] && spread[j] == 0.0).collect();
    let active: Vec<usize> = (0..m).filter(|&j| mask[j] && spread[j] > 0.0).collect();
    let mut stats: Vec<f64> = transformed
        .iter()
        .map(|row| {
            active
                .iter()
                .map(|&j| (row[j] - center[j]).abs() / spread[j])
                .fold(0.0, f64::max)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let n = stats.len();
    let rank = (((1.0 - alpha) * n as f64).ceil() as usize).clamp(1, n);
    let c_star = stats[rank - 1];
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for j in 0..m {
        let median_psd = median(&ps.column(j));
        if mask[j] && spread[j] > 0.0 {
            lower[j] = fuller_log_bracket(center[j] - c_star * spread[j], xi).0;
            upper[j] = fuller_log_bracket(center[j] + c_star * spread[j], xi).1;
        } else {
            lower[j] = median_psd;
            upper[j] = median_psd;
        }
    }
    Ok(CredibleBand {
        lower,
        upper,
        alpha,
        kind: BandKind::Uniform,
        c_star: Some(c_star),
        included: mask.to_vec(),
        degenerate,
    })
}

/// Columnwise type-7 quantiles at `alpha/2` and `1 - alpha/2`.
pub fn pointwise_credible_band(ps: &PosteriorSpectra, alpha: f64) -> Result<CredibleBand> {
    ps.ensure_nonempty()?;
    check_alpha(alpha)?;
    let m = ps.grid.len();
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for j in 0..m {
        let mut col = ps.column(j);
        col.sort_by(f64::total_cmp);
        lower[j] = quantile_sorted(&col, alpha / 2.0);
        upper[j] = quantile_sorted(&col, 1.0 - alpha / 2.0);
    }
    Ok(CredibleBand {
        lower,
        upper,
        alpha,
        kind: BandKind::Pointwise,
        c_star: None,
        included: vec![true; m],
        degenerate: Vec::new(),
    })
}

/// Trapezoidal integral of `|estimate - truth|` over the Fourier grid.
pub fn integrated_absolute_error(
    estimate: &[f64],
    truth: &SpectralGridValues,
    grid: &FrequencyGrid,
) -> Result<f64> {
    if estimate.len() != grid.len() || truth.len() != grid.len() {
        return Err(Error::invalid(format!(
            "grid has {} points, estimate {} and truth {}",
            grid.len(),
            estimate.len(),
            truth.len()
        )));
    }
    let err: Vec<f64> = estimate
        .iter()
        .zip(&truth.values)
        .map(|(e, t)| (e - t).abs())
        .collect();
    Ok(trapezoid(grid.freqs(), &err))
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Whether the band contains `truth` at every included frequency.
pub fn band_covers(band: &CredibleBand, truth: &SpectralGridValues) -> bool {
    band.included
        .iter()
        .enumerate()
        .filter(|(_, inc)| **inc)
        .all(|(j, _)| {
            let t = truth.values[j];
            band.lower[j] <= t && t <= band.upper[j]
        })
}

/// Fraction of draws lying entirely inside the band at included frequencies.
pub fn sample_coverage(ps: &PosteriorSpectra, band: &CredibleBand) -> f64 {
    if ps.samples.is_empty() {
        return f64::NAN;
    }
    let inside = ps
        .samples
        .iter()
        .filter(|row| {
            (0..row.len())
                .filter(|&j| band.included[j])
                .all(|j| band.lower[j] <= row[j] && row[j] <= band.upper[j])
        })
        .count();
    inside as f64 / ps.samples.len() as f64
}
