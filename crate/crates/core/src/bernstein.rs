//! Bernstein–Dirichlet prior on the damped correction function.
//!
//! `c_eta(pi w) = tau * sum_j w_{j,k} beta(w | j, k - j + 1)` where the
//! weights come from a truncated stick-breaking draw of a Dirichlet process
//! binned into `k` equal cells.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fourier::FrequencyGrid;
use crate::likelihood::{SpectralGridValues, SpectralRole};

/// Base density `g0` of the Dirichlet process on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseDensity {
    Uniform,
    Beta { a: f64, b: f64 },
}

impl BaseDensity {
    pub fn ln_density(&self, w: f64) -> f64 {
        if !(w > 0.0 && w < 1.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            BaseDensity::Uniform => 0.0,
            BaseDensity::Beta { a, b } => {
                ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
                    + (a - 1.0) * w.ln()
                    + (b - 1.0) * (1.0 - w).ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinDirichletConfig {
    /// Dirichlet process mass `M`.
    pub m: f64,
    pub g0: BaseDensity,
    pub theta_k: f64,
    pub k_max: usize,
    pub alpha_tau: f64,
    pub beta_tau: f64,
    /// Stick-breaking truncation `L`.
    pub l: usize,
}

/// `max(20, ceil(n^{1/3}))`.
pub fn default_truncation(n: usize) -> usize {
    let mut m = (n as f64).cbrt().floor() as usize;
    while m * m * m < n {
        m += 1;
    }
    while m > 0 && (m - 1) * (m - 1) * (m - 1) >= n {
        m -= 1;
    }
    20usize.max(m)
}

impl BernsteinDirichletConfig {
    pub fn for_series_len(n: usize) -> Self {
        Self {
            m: 1.0,
            g0: BaseDensity::Uniform,
            theta_k: 0.01,
            k_max: 500,
            alpha_tau: 0.001,
            beta_tau: 0.001,
            l: default_truncation(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.m) {
            return Err(Error::invalid(format!("M must be positive, got {}", self.m)));
        }
        if !pos(self.theta_k) {
            return Err(Error::invalid(format!("theta_k must be positive, got {}", self.theta_k)));
        }
        if !pos(self.alpha_tau) || !pos(self.beta_tau) {
            return Err(Error::invalid("alpha_tau and beta_tau must be positive"));
        }
        if self.l < 1 || self.k_max < 1 {
            return Err(Error::invalid("L and k_max must be at least 1"));
        }
        if let BaseDensity::Beta { a, b } = self.g0 {
            if !pos(a) || !pos(b) {
                return Err(Error::invalid("beta base density parameters must be positive"));
            }
        }
        Ok(())
    }

    /// Normalized `ln p_k(k)` for `k = 1..=k_max`, at index `k - 1`.
    pub fn ln_pk_table(&self) -> Vec<f64> {
        let raw: Vec<f64> = (1..=self.k_max)
            .map(|k| {
                let k = k as f64;
                -self.theta_k * k * k.ln()
            })
            .collect();
        let lse = log_sum_exp(&raw);
        raw.into_iter().map(|v| v - lse).collect()
    }

    /// Inverse-gamma log density of `tau`.
    pub fn ln_p_tau(&self, tau: f64) -> f64 {
        ln_inverse_gamma(tau, self.alpha_tau, self.beta_tau)
    }
}

pub fn ln_inverse_gamma(x: f64, shape: f64, scale: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinState {
    /// `V_1..V_L`.
    pub v: Vec<f64>,
    /// `W_0..W_L`.
    pub w: Vec<f64>,
    pub k: usize,
    pub tau: f64,
}

impl BernsteinState {
    pub fn new(v: Vec<f64>, w: Vec<f64>, k: usize, tau: f64) -> Result<Self> {
        let s = Self { v, w, k, tau };
        s.validate()?;
        Ok(s)
    }

    pub fn truncation(&self) -> usize {
        self.v.len()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: &f64| *x > 0.0 && *x < 1.0;
        if self.v.is_empty() || self.w.len() != self.v.len() + 1 {
            return Err(Error::invalid(format!(
                "need L >= 1 sticks and L + 1 atoms, got {} and {}",
                self.v.len(),
                self.w.len()
            )));
        }
        if !self.v.iter().all(unit) || !self.w.iter().all(unit) {
            return Err(Error::invalid("V and W must lie in (0, 1)"));
        }
        if self.k < 1 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }

    /// Whether the state lies in the support of the prior for `cfg`.
    pub fn in_support(&self, cfg: &BernsteinDirichletConfig) -> bool {
        self.validate().is_ok() && self.k <= cfg.k_max && self.v.len() == cfg.l
    }
}

/// Stick weights `(p_0, p_1, .., p_L)`, indexed like the atoms `W`.
pub fn stick_breaking(v: &[f64]) -> Result<Vec<f64>> {
    if !v.iter().all(|x| *x > 0.0 && *x < 1.0) {
        return Err(Error::invalid("stick-breaking fractions must lie in (0, 1)"));
    }
    Ok(stick_breaking_unchecked(v))
}

pub fn stick_breaking_unchecked(v: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(v.len() + 1);
    p.push(0.0);
    let mut rest = 1.0;
    for &vl in v {
        p.push(vl * rest);
        rest *= 1.0 - vl;
    }
    let used: f64 = p[1..].iter().sum();
    p[0] = (1.0 - used).max(0.0);
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    /// `w_{1,k} .. w_{k,k}`.
    pub w: Vec<f64>,
}

impl MixtureWeights {
    pub fn k(&self) -> usize {
        self.w.len()
    }
}

/// Cell `j` in `1..=k` with `(j-1)/k < w <= j/k`; `w = 0` goes to cell 1.
pub fn cell_index(w: f64, k: usize) -> usize {
    let kf = k as f64;
    let mut j = (w * kf).ceil().clamp(1.0, kf) as usize;
    // Guard against rounding in `w * k` at cell boundaries.
    while j > 1 && w <= (j - 1) as f64 / kf {
        j -= 1;
    }
    while j < k && w > j as f64 / kf {
        j += 1;
    }
    j
}

pub fn mixture_weights(p: &[f64], w: &[f64], k: usize) -> MixtureWeights {
    let mut out = vec![0.0; k];
    for (&pl, &wl) in p.iter().zip(w) {
        out[cell_index(wl, k) - 1] += pl;
    }
    MixtureWeights { w: out }
}

/// Bernstein basis evaluator on a fixed set of points `w in [0, 1]`.
///
/// Log-gamma values and `ln w`, `ln(1 - w)` are tabulated once so each
/// basis value costs one exponential.
#[derive(Debug, Clone)]
pub struct BernsteinBasis {
    omega: Vec<f64>,
    ln_omega: Vec<f64>,
    ln_one_minus: Vec<f64>,
    ln_fact: Vec<f64>,
}

impl BernsteinBasis {
    pub fn new(omega: Vec<f64>, k_max: usize) -> Self {
        let ln_omega = omega.iter().map(|w| w.ln()).collect();
        let ln_one_minus = omega.iter().map(|w| (1.0 - w).ln()).collect();
        let mut ln_fact = vec![0.0; k_max + 1];
        for i in 1..=k_max {
            ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
        }
        Self {
            omega,
            ln_omega,
            ln_one_minus,
            ln_fact,
        }
    }

    pub fn for_grid(grid: &FrequencyGrid, k_max: usize) -> Self {
        Self::new(grid.unit_freqs(), k_max)
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn k_max(&self) -> usize {
        self.ln_fact.len() - 1
    }

    fn ensure_k(&mut self, k: usize) {
        while self.ln_fact.len() <= k {
            let i = self.ln_fact.len();
            let prev = self.ln_fact[i - 1];
            self.ln_fact.push(prev + (i as f64).ln());
        }
    }

    /// `beta(w_i | j, k - j + 1)`.
    pub fn density(&self, i: usize, j: usize, k: usize) -> f64 {
        let w = self.omega[i];
        if w <= 0.0 {
            return if j == 1 { k as f64 } else { 0.0 };
        }
        if w >= 1.0 {
            return if j == k { k as f64 } else { 0.0 };
        }
        // Gamma(k+1) / (Gamma(j) Gamma(k-j+1)) = k! / ((j-1)! (k-j)!)
        let ln_c = self.ln_fact[k] - self.ln_fact[j - 1] - self.ln_fact[k - j];
        (ln_c + (j - 1) as f64 * self.ln_omega[i] + (k - j) as f64 * self.ln_one_minus[i]).exp()
    }

    /// Writes `tau * sum_j weights[j] beta(w_i | j, k-j+1)` into `out`, with
    /// `weights` given as sparse `(j, weight)` pairs.
    pub fn mixture_into(&mut self, cells: &[(usize, f64)], k: usize, tau: f64, out: &mut [f64]) {
        self.ensure_k(k);
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for &(j, wj) in cells {
                s += wj * self.density(i, j, k);
            }
            *o = tau * s;
        }
    }
}

/// Default number of tabulated basis values kept by [`BasisCache`].
pub const DEFAULT_BASIS_CACHE_ENTRIES: usize = 16 << 20;

/// [`BernsteinBasis`] with the values for each `k` tabulated on first use,
/// up to a fixed number of stored entries.
#[derive(Debug, Clone)]
pub struct BasisCache {
    basis: BernsteinBasis,
    /// `tables[k][(j - 1) * m + i] = beta(w_i | j, k - j + 1)`.
    tables: Vec<Option<Vec<f64>>>,
    stored: usize,
    budget: usize,
}

impl BasisCache {
    pub fn new(basis: BernsteinBasis, budget: usize) -> Self {
        Self {
            basis,
            tables: Vec::new(),
            stored: 0,
            budget,
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    fn table(&mut self, k: usize) -> Option<&[f64]> {
        if self.tables.len() <= k {
            self.tables.resize(k + 1, None);
        }
        let m = self.basis.len();
        if self.tables[k].is_none() && self.stored + k * m <= self.budget {
            self.basis.ensure_k(k);
            let mut t = Vec::with_capacity(k * m);
            for j in 1..=k {
                for i in 0..m {
                    t.push(self.basis.density(i, j, k));
                }
            }
            self.stored += t.len();
            self.tables[k] = Some(t);
        }
        self.tables[k].as_deref()
    }

    /// Same contract as [`BernsteinBasis::mixture_into`].
    pub fn mixture_into(&mut self, cells: &[(usize, f64)], k: usize, tau: f64, out: &mut [f64]) {
        let m = self.basis.len();
        match self.table(k) {
            Some(t) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for &(j, wj) in cells {
                    let row = &t[(j - 1) * m..j * m];
                    for (o, b) in out.iter_mut().zip(row) {
                        *o += wj * b;
                    }
                }
                out.iter_mut().for_each(|o| *o *= tau);
            }
            None => self.basis.mixture_into(cells, k, tau, out),
        }
    }
}

/// Nonzero cells `(j, w_{j,k})` of the mixture weights for `k`.
pub fn sparse_cells(p: &[f64], w: &[f64], k: usize, out: &mut Vec<(usize, f64)>) {
    out.clear();
    for (&pl, &wl) in p.iter().zip(w) {
        if pl <= 0.0 {
            continue;
        }
        let j = cell_index(wl, k);
        match out.iter_mut().find(|(c, _)| *c == j) {
            Some(entry) => entry.1 += pl,
            None => out.push((j, pl)),
        }
    }
}

pub fn eval_c_eta(state: &BernsteinState, grid: &FrequencyGrid) -> SpectralGridValues {
    let mut basis = BernsteinBasis::for_grid(grid, state.k);
    let p = stick_breaking_unchecked(&state.v);
    let mut cells = Vec::new();
    sparse_cells(&p, &state.w, state.k, &mut cells);
    let mut values = vec![0.0; grid.len()];
    basis.mixture_into(&cells, state.k, state.tau, &mut values);
    SpectralGridValues::new(values, SpectralRole::DampedCorrection)
}

/// Joint log prior density of the truncated representation. Returns
/// negative infinity outside the support.
pub fn log_prior(state: &BernsteinState, cfg: &BernsteinDirichletConfig) -> f64 {
    if !state.in_support(cfg) {
        return f64::NEG_INFINITY;
    }
    log_prior_with_table(state, cfg, &cfg.ln_pk_table())
}

pub(crate) fn log_prior_with_table(
    state: &BernsteinState,
    cfg: &BernsteinDirichletConfig,
    ln_pk: &[f64],
) -> f64 {
    let ln_m = cfg.m.ln();
    let v_part: f64 = state
        .v
        .iter()
        .map(|v| ln_m + (cfg.m - 1.0) * (1.0 - v).ln())
        .sum();
    let w_part: f64 = state.w.iter().map(|w| cfg.g0.ln_density(*w)).sum();
    v_part + w_part + ln_pk[state.k - 1] + cfg.ln_p_tau(state.tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::fourier_frequencies;

    #[test]
    fn stick_breaking_examples() {
        let p = stick_breaking(&[0.5, 0.5]).unwrap();
        assert_eq!(p, vec![0.25, 0.5, 0.25]);
        let e = 1e-6;
        let p = stick_breaking(&[1.0 - e; 5]).unwrap();
        assert!(p[0] < 1e-5);
        assert!(stick_breaking(&[0.5, 1.0]).is_err());
        assert!(stick_breaking(&[0.0]).is_err());
    }

    #[test]
    fn cell_boundaries() {
        assert_eq!(cell_index(0.0, 4), 1);
        assert_eq!(cell_index(0.25, 4), 1);
        assert_eq!(cell_index(0.2500001, 4), 2);
        assert_eq!(cell_index(1.0, 4), 4);
        assert_eq!(cell_index(0.3, 10), 3);
        assert_eq!(cell_index(0.7, 10), 7);
        for k in 1..200 {
            for j in 1..=k {
                assert_eq!(cell_index(j as f64 / k as f64, k), j);
            }
        }
    }

    #[test]
    fn mixture_weight_examples() {
        let m = mixture_weights(&[0.3, 0.7], &[0.1, 0.9], 1);
        assert_eq!(m.w, vec![1.0]);
        let m = mixture_weights(&[1.0, 0.0], &[0.25, 0.9], 2);
        assert_eq!(m.w, vec![1.0, 0.0]);
    }

    #[test]
    fn c_eta_k1_is_tau() {
        let grid = fourier_frequencies(16).unwrap();
        let s = BernsteinState::new(vec![0.3, 0.6], vec![0.1, 0.5, 0.9], 1, 2.5).unwrap();
        let c = eval_c_eta(&s, &grid);
        assert!(c.values.iter().all(|v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn c_eta_k2_linear() {
        let grid = fourier_frequencies(16).unwrap();
        // Every atom in the first cell.
        let s = BernsteinState::new(vec![0.3, 0.6], vec![0.1, 0.2, 0.4], 2, 1.0).unwrap();
        let c = eval_c_eta(&s, &grid);
        for (v, w) in c.values.iter().zip(grid.unit_freqs()) {
            assert!((v - 2.0 * (1.0 - w)).abs() < 1e-13);
        }
    }

    #[test]
    fn basis_matches_log_gamma_formula() {
        let basis = BernsteinBasis::new(vec![0.0, 0.13, 0.5, 0.77, 1.0], 300);
        for &k in &[1usize, 2, 7, 50, 300] {
            for j in [1, k / 2 + 1, k] {
                for i in 0..basis.len() {
                    let w = basis.omega[i];
                    let (a, b) = (j as f64, (k - j + 1) as f64);
                    let expected = if w == 0.0 || w == 1.0 {
                        if (w == 0.0 && j == 1) || (w == 1.0 && j == k) {
                            k as f64
                        } else {
                            0.0
                        }
                    } else {
                        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
                            + (a - 1.0) * w.ln()
                            + (b - 1.0) * (1.0 - w).ln())
                        .exp()
                    };
                    let got = basis.density(i, j, k);
                    assert!(
                        (got - expected).abs() <= 1e-9 * expected.max(1.0),
                        "k={k} j={j} w={w}: {got} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn cached_and_direct_mixtures_agree() {
        let grid = fourier_frequencies(33).unwrap();
        let basis = BernsteinBasis::for_grid(&grid, 40);
        let mut cached = BasisCache::new(basis.clone(), DEFAULT_BASIS_CACHE_ENTRIES);
        let mut uncached = BasisCache::new(basis, 0);
        let p = stick_breaking(&[0.2, 0.5, 0.7]).unwrap();
        let w = [0.05, 0.33, 0.5, 0.97];
        let mut cells = Vec::new();
        for k in [1, 3, 17, 40] {
            sparse_cells(&p, &w, k, &mut cells);
            let dense = mixture_weights(&p, &w, k);
            let from_sparse: f64 = cells.iter().map(|c| c.1).sum();
            assert!((from_sparse - dense.w.iter().sum::<f64>()).abs() < 1e-15);
            let mut a = vec![0.0; grid.len()];
            let mut b = vec![0.0; grid.len()];
            cached.mixture_into(&cells, k, 1.7, &mut a);
            uncached.mixture_into(&cells, k, 1.7, &mut b);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn prior_terms() {
        let cfg = BernsteinDirichletConfig {
            l: 2,
            ..BernsteinDirichletConfig::for_series_len(8)
        };
        let s = BernsteinState::new(vec![0.3, 0.6], vec![0.1, 0.5, 0.9], 1, 1.0).unwrap();
        let lp = log_prior(&s, &cfg);
        let table = cfg.ln_pk_table();
        // Uniform g0 and M = 1: only the k and tau terms remain.
        assert!((lp - table[0] - cfg.ln_p_tau(1.0)).abs() < 1e-12);
        assert!((table[0] - table[1] - 0.01 * 2.0 * 2f64.ln()).abs() < 1e-12);
        // Inverse-gamma(0.001, 0.001) at 1: b^a / Gamma(a) * exp(-b).
        let a: f64 = 0.001;
        let reference = (a.powf(a) / statrs::function::gamma::gamma(a) * (-a).exp()).ln();
        assert!((cfg.ln_p_tau(1.0) - reference).abs() < 1e-10);
        let bad = BernsteinState { k: 600, ..s.clone() };
        assert_eq!(log_prior(&bad, &cfg), f64::NEG_INFINITY);
        let bad = BernsteinState { v: vec![0.3, 1.0], ..s };
        assert_eq!(log_prior(&bad, &cfg), f64::NEG_INFINITY);
    }

    #[test]
    fn pk_table_normalized() {
        let cfg = BernsteinDirichletConfig::for_series_len(64);
        let t = cfg.ln_pk_table();
        let total: f64 = t.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(t.len(), 500);
    }

    #[test]
    fn default_truncation_rule() {
        assert_eq!(default_truncation(64), 20);
        assert_eq!(default_truncation(8000), 20);
        assert_eq!(default_truncation(8001), 21);
        assert_eq!(default_truncation(27_000), 30);
    }

    #[test]
    fn config_validation() {
        let mut cfg = BernsteinDirichletConfig::for_series_len(64);
        assert!(cfg.validate().is_ok());
        cfg.m = 0.0;
        assert!(cfg.validate().is_err());
        cfg.m = 1.0;
        cfg.k_max = 0;
        assert!(cfg.validate().is_err());
        cfg.k_max = 5;
        cfg.g0 = BaseDensity::Beta { a: -1.0, b: 1.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn beta_base_density() {
        let g = BaseDensity::Beta { a: 2.0, b: 3.0 };
        // 12 w (1-w)^2
        let w: f64 = 0.3;
        assert!((g.ln_density(w) - (12.0 * w * 0.49).ln()).abs() < 1e-12);
        assert_eq!(g.ln_density(0.0), f64::NEG_INFINITY);
    }
}
