//! Sampler for the nonparametrically corrected AR model. With working order
//! `p = 0` it is the Whittle-likelihood sampler with a Bernstein–Dirichlet
//! prior on the spectral density.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Open01, StandardNormal};

use super::adapt::AdaptiveScale;
use super::rng::chain_rng;
use super::{
    AcceptanceSummary, ChainOutput, KUpdate, LikelihoodMode, McmcConfig, Method, NpcState,
    TauUpdate, TraceRecord,
};
use crate::armodels::{
    ar_spectral_density_grid, yule_walker_fit, ArLikelihood, ArModel, PacfVector,
};
use crate::bernstein::{
    log_prior_with_table, log_sum_exp, sparse_cells, stick_breaking_unchecked, BaseDensity,
    BasisCache, BernsteinBasis, BernsteinDirichletConfig, BernsteinState,
    DEFAULT_BASIS_CACHE_ENTRIES,
};
use crate::error::{Error, Result};
use crate::fourier::{fourier_frequencies, is_endpoint, periodogram, FrequencyGrid, TimeSeries};
use crate::likelihood::CorrectedLikelihood;
use crate::postprocess::PosteriorSpectra;

const LN_2: f64 = std::f64::consts::LN_2;

/// Log posterior density (up to the normalizing constant of the posterior)
/// of the corrected model at `state`: joint Bernstein–Dirichlet prior,
/// uniform priors on the partial autocorrelations and on `eta`, and the
/// corrected likelihood under the unit-variance working model. Negative
/// infinity outside the support.
pub fn npc_full_conditional_logpost(
    state: &NpcState,
    ts: &TimeSeries,
    p: usize,
    prior: &BernsteinDirichletConfig,
    omit_endpoints: bool,
) -> f64 {
    if state.rho.order() != p
        || !(0.0..=1.0).contains(&state.eta)
        || !state.bern.in_support(prior)
        || ts.len() <= p
    {
        return f64::NEG_INFINITY;
    }
    let Ok(grid) = fourier_frequencies(ts.len()) else {
        return f64::NEG_INFINITY;
    };
    let Ok(working) = ArModel::from_pacf(state.rho.clone(), 1.0) else {
        return f64::NEG_INFINITY;
    };
    let f_param = ar_spectral_density_grid(&working, &grid);
    let c_eta = crate::bernstein::eval_c_eta(&state.bern, &grid);
    let correction = crate::likelihood::total_correction(&c_eta.values, &f_param, state.eta);
    let Ok(mut engine) = CorrectedLikelihood::new(ts, omit_endpoints) else {
        return f64::NEG_INFINITY;
    };
    let ar = ArLikelihood::new(&state.rho);
    let ll = match engine.evaluate(&correction, &ar, 1.0) {
        Some(e) => e.log_lik,
        None => return f64::NEG_INFINITY,
    };
    log_prior_with_table(&state.bern, prior, &prior.ln_pk_table()) - p as f64 * LN_2 + ll
}

/// Likelihood evaluation shared by all updates.
#[derive(Debug, Clone)]
struct LikEval {
    engine: CorrectedLikelihood,
    correction: Vec<f64>,
    flat: bool,
}

impl LikEval {
    /// Log-likelihood for mixture `q` (without `tau`), scale `tau` and
    /// damping factors `f_param^{eta - 1}`.
    fn eval(&mut self, q: &[f64], tau: f64, damp: &[f64], ar: &ArLikelihood) -> f64 {
        if self.flat {
            return 0.0;
        }
        for ((c, qi), d) in self.correction.iter_mut().zip(q).zip(damp) {
            *c = tau * qi * d;
        }
        match self.engine.evaluate(&self.correction, ar, 1.0) {
            Some(e) if e.log_lik.is_finite() => e.log_lik,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Quadratic form with `tau = 1`.
    fn quad_unit_tau(&mut self, q: &[f64], damp: &[f64], ar: &ArLikelihood) -> Option<f64> {
        for ((c, qi), d) in self.correction.iter_mut().zip(q).zip(damp) {
            *c = qi * d;
        }
        self.engine.evaluate(&self.correction, ar, 1.0).map(|e| e.quad)
    }
}

/// Metropolis-within-Gibbs sampler over `(V, W, k, tau, rho, eta)`.
///
/// One sweep updates `V_1..V_L`, `W_0..W_L`, `k`, `tau`, `rho_1..rho_p` and
/// `eta` in that order. `V_l` and `W_l` use independent uniform proposals,
/// `tau` its inverse-gamma full conditional, `rho_l` adaptive Gaussian random
/// walks (proposals outside `(-1, 1)` are rejected) and `eta` a Gaussian
/// random walk clamped to `[0, 1]`. For `p = 0`, `eta` is fixed at `0`.
#[derive(Debug, Clone)]
pub struct NpcSampler {
    prior: BernsteinDirichletConfig,
    cfg: McmcConfig,
    p: usize,
    grid: FrequencyGrid,
    lik: LikEval,
    basis: BasisCache,
    ln_pk: Vec<f64>,
    n_used: usize,
    state: NpcState,
    sticks: Vec<f64>,
    cells: Vec<(usize, f64)>,
    q: Vec<f64>,
    q_prop: Vec<f64>,
    ar: ArLikelihood,
    f_param: Vec<f64>,
    damp: Vec<f64>,
    ll: f64,
    rng: ChaCha8Rng,
    rho_scale: Vec<AdaptiveScale>,
    acc: AcceptanceSummary,
}

fn draw_unit<R: Rng + ?Sized>(rng: &mut R, dist: impl Fn(&mut R) -> f64) -> f64 {
    loop {
        let x = dist(rng);
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

fn draw_base<R: Rng + ?Sized>(g0: &BaseDensity, rng: &mut R) -> f64 {
    match *g0 {
        BaseDensity::Uniform => rng.sample(Open01),
        BaseDensity::Beta { a, b } => {
            let d = Beta::new(a, b).expect("validated beta parameters");
            draw_unit(rng, |r| d.sample(r))
        }
    }
}

fn damping(f_param: &[f64], eta: f64) -> Vec<f64> {
    f_param.iter().map(|f| f.powf(eta - 1.0)).collect()
}

/// Inverse-gamma draw via a gamma draw of the precision. Returns `None` if
/// the draw under- or overflows.
pub(crate) fn draw_inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Option<f64> {
    let g = Gamma::new(shape, 1.0 / rate).ok()?.sample(rng);
    let x = 1.0 / g;
    (x.is_finite() && x > 0.0).then_some(x)
}

impl NpcSampler {
    /// Sampler started from a deterministic initial state: partial
    /// autocorrelations from the Yule–Walker fit, `eta = 0.5` (`0` for
    /// `p = 0`), `V` and `W` drawn from the prior, `k = min(k_max, 20)` and
    /// `tau` matched to the periodogram.
    pub fn new(
        ts: &TimeSeries,
        p: usize,
        prior: &BernsteinDirichletConfig,
        cfg: &McmcConfig,
    ) -> Result<Self> {
        prior.validate()?;
        cfg.validate()?;
        let n = ts.len();
        if n <= p {
            return Err(Error::invalid(format!(
                "series length {n} must exceed the working order {p}"
            )));
        }
        let mut rng = chain_rng(cfg.seed, cfg.stream);
        let rho = if p == 0 {
            PacfVector::default()
        } else {
            yule_walker_fit(ts, p)?.pacf().clone()
        };
        let eta = if p == 0 { 0.0 } else { 0.5 };
        let stick = Beta::new(1.0, prior.m).map_err(|e| Error::invalid(e.to_string()))?;
        let v: Vec<f64> = (0..prior.l)
            .map(|_| draw_unit(&mut rng, |r| stick.sample(r)))
            .collect();
        let w: Vec<f64> = (0..=prior.l).map(|_| draw_base(&prior.g0, &mut rng)).collect();
        let k = prior.k_max.min(20);
        let grid = fourier_frequencies(n)?;
        let working = ArModel::from_pacf(rho.clone(), 1.0)?;
        let f_param = ar_spectral_density_grid(&working, &grid);
        let basis = BernsteinBasis::for_grid(&grid, k);
        let mut cache = BasisCache::new(basis, DEFAULT_BASIS_CACHE_ENTRIES);
        let sticks = stick_breaking_unchecked(&v);
        let mut cells = Vec::new();
        sparse_cells(&sticks, &w, k, &mut cells);
        let mut q = vec![0.0; grid.len()];
        cache.mixture_into(&cells, k, 1.0, &mut q);
        let pg = periodogram(ts);
        let ratios: Vec<f64> = (0..grid.len())
            .filter(|&j| !is_endpoint(j, n))
            .map(|j| pg.ordinates()[j] / (q[j] * f_param[j].powf(eta)))
            .filter(|r| r.is_finite() && *r > 0.0)
            .collect();
        let tau = if ratios.is_empty() {
            1.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        };
        let state = NpcState {
            bern: BernsteinState::new(v, w, k, tau)?,
            rho,
            eta,
        };
        Self::assemble(ts, p, prior, cfg, state, rng, cache, sticks, cells, q, f_param, grid)
    }

    /// Sampler started from a given state.
    pub fn with_state(
        ts: &TimeSeries,
        prior: &BernsteinDirichletConfig,
        cfg: &McmcConfig,
        state: NpcState,
    ) -> Result<Self> {
        prior.validate()?;
        cfg.validate()?;
        if !state.bern.in_support(prior) {
            return Err(Error::invalid("initial state outside the prior support"));
        }
        if !(0.0..=1.0).contains(&state.eta) {
            return Err(Error::invalid("initial eta outside [0, 1]"));
        }
        let p = state.rho.order();
        if ts.len() <= p {
            return Err(Error::invalid("series length must exceed the working order"));
        }
        let rng = chain_rng(cfg.seed, cfg.stream);
        let grid = fourier_frequencies(ts.len())?;
        let working = ArModel::from_pacf(state.rho.clone(), 1.0)?;
        let f_param = ar_spectral_density_grid(&working, &grid);
        let mut cache = BasisCache::new(
            BernsteinBasis::for_grid(&grid, state.bern.k),
            DEFAULT_BASIS_CACHE_ENTRIES,
        );
        let sticks = stick_breaking_unchecked(&state.bern.v);
        let mut cells = Vec::new();
        sparse_cells(&sticks, &state.bern.w, state.bern.k, &mut cells);
        let mut q = vec![0.0; grid.len()];
        cache.mixture_into(&cells, state.bern.k, 1.0, &mut q);
        Self::assemble(ts, p, prior, cfg, state, rng, cache, sticks, cells, q, f_param, grid)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        ts: &TimeSeries,
        p: usize,
        prior: &BernsteinDirichletConfig,
        cfg: &McmcConfig,
        state: NpcState,
        rng: ChaCha8Rng,
        basis: BasisCache,
        sticks: Vec<f64>,
        cells: Vec<(usize, f64)>,
        q: Vec<f64>,
        f_param: Vec<f64>,
        grid: FrequencyGrid,
    ) -> Result<Self> {
        let engine = CorrectedLikelihood::new(ts, cfg.omit_endpoints)?;
        let n_used = engine.n_used();
        let m = grid.len();
        let mut lik = LikEval {
            engine,
            correction: vec![0.0; m],
            flat: cfg.likelihood == LikelihoodMode::Flat,
        };
        let ar = ArLikelihood::new(&state.rho);
        let damp = damping(&f_param, state.eta);
        let ll = lik.eval(&q, state.bern.tau, &damp, &ar);
        let acc = AcceptanceSummary {
            rho: vec![Default::default(); p],
            ..Default::default()
        };
        Ok(Self {
            prior: prior.clone(),
            cfg: cfg.clone(),
            p,
            grid,
            lik,
            basis,
            ln_pk: prior.ln_pk_table(),
            n_used,
            state,
            sticks,
            cells,
            q_prop: vec![0.0; m],
            q,
            ar,
            f_param,
            damp,
            ll,
            rng,
            rho_scale: vec![AdaptiveScale::new(cfg.rho_proposal_sd); p],
            acc,
        })
    }

    pub fn state(&self) -> &NpcState {
        &self.state
    }

    pub fn log_lik(&self) -> f64 {
        self.ll
    }

    /// Log posterior at the current state, from the sampler's cached terms.
    pub fn log_posterior(&self) -> f64 {
        log_prior_with_table(&self.state.bern, &self.prior, &self.ln_pk) - self.p as f64 * LN_2
            + self.ll
    }

    pub fn acceptance(&self) -> &AcceptanceSummary {
        &self.acc
    }

    pub fn rho_proposal_sd(&self) -> Vec<f64> {
        self.rho_scale.iter().map(|s| s.sd()).collect()
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        if log_ratio >= 0.0 {
            return true;
        }
        let u: f64 = self.rng.sample(Open01);
        u.ln() < log_ratio
    }

    /// Mixture for the current `V`, `W` and `k` into `q_prop`.
    fn propose_mixture(&mut self, sticks: &[f64], w: &[f64], k: usize) {
        sparse_cells(sticks, w, k, &mut self.cells);
        self.basis.mixture_into(&self.cells, k, 1.0, &mut self.q_prop);
    }

    pub fn update_v(&mut self, l: usize, in_burn_in: bool) {
        let new_v: f64 = self.rng.sample(Open01);
        let old_v = self.state.bern.v[l];
        let mut v = self.state.bern.v.clone();
        v[l] = new_v;
        let sticks = stick_breaking_unchecked(&v);
        self.propose_mixture(&sticks, &self.state.bern.w.clone(), self.state.bern.k);
        let ll_new = self
            .lik
            .eval(&self.q_prop, self.state.bern.tau, &self.damp, &self.ar);
        let prior_ratio = (self.prior.m - 1.0) * ((1.0 - new_v).ln() - (1.0 - old_v).ln());
        let accepted = self.accept(prior_ratio + ll_new - self.ll);
        if accepted {
            self.state.bern.v = v;
            self.sticks = sticks;
            std::mem::swap(&mut self.q, &mut self.q_prop);
            self.ll = ll_new;
        }
        self.acc.v.record(in_burn_in, accepted);
    }

    pub fn update_w(&mut self, l: usize, in_burn_in: bool) {
        let new_w: f64 = self.rng.sample(Open01);
        let old_w = self.state.bern.w[l];
        let mut w = self.state.bern.w.clone();
        w[l] = new_w;
        let sticks = self.sticks.clone();
        self.propose_mixture(&sticks, &w, self.state.bern.k);
        let ll_new = self
            .lik
            .eval(&self.q_prop, self.state.bern.tau, &self.damp, &self.ar);
        let prior_ratio = self.prior.g0.ln_density(new_w) - self.prior.g0.ln_density(old_w);
        let accepted = self.accept(prior_ratio + ll_new - self.ll);
        if accepted {
            self.state.bern.w = w;
            std::mem::swap(&mut self.q, &mut self.q_prop);
            self.ll = ll_new;
        }
        self.acc.w.record(in_burn_in, accepted);
    }

    pub fn update_k(&mut self, in_burn_in: bool) {
        match self.cfg.k_update {
            KUpdate::Enumerate => self.update_k_enumerate(in_burn_in),
            KUpdate::RandomWalk { max_step } => self.update_k_random_walk(max_step, in_burn_in),
        }
    }

    fn update_k_enumerate(&mut self, in_burn_in: bool) {
        let k_max = self.prior.k_max;
        let w = self.state.bern.w.clone();
        let sticks = self.sticks.clone();
        let tau = self.state.bern.tau;
        let mut logp = Vec::with_capacity(k_max);
        let mut lls = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let ll = if self.lik.flat {
                0.0
            } else {
                self.propose_mixture(&sticks, &w, k);
                self.lik.eval(&self.q_prop, tau, &self.damp, &self.ar)
            };
            lls.push(ll);
            logp.push(self.ln_pk[k - 1] + ll);
        }
        let lse = log_sum_exp(&logp);
        let u: f64 = self.rng.sample(Open01);
        let mut cum = 0.0;
        let mut chosen = k_max;
        for (i, lp) in logp.iter().enumerate() {
            cum += (lp - lse).exp();
            if u <= cum {
                chosen = i + 1;
                break;
            }
        }
        let changed = chosen != self.state.bern.k;
        self.state.bern.k = chosen;
        self.propose_mixture(&sticks, &w, chosen);
        std::mem::swap(&mut self.q, &mut self.q_prop);
        self.ll = lls[chosen - 1];
        self.acc.k.record(in_burn_in, changed);
    }

    fn update_k_random_walk(&mut self, max_step: usize, in_burn_in: bool) {
        let step = self.rng.random_range(1..=max_step) as i64;
        let sign = if self.rng.random::<bool>() { 1 } else { -1 };
        let k_new = self.state.bern.k as i64 + sign * step;
        if k_new < 1 || k_new > self.prior.k_max as i64 {
            self.acc.k.record(in_burn_in, false);
            return;
        }
        let k_new = k_new as usize;
        let w = self.state.bern.w.clone();
        let sticks = self.sticks.clone();
        self.propose_mixture(&sticks, &w, k_new);
        let ll_new = self
            .lik
            .eval(&self.q_prop, self.state.bern.tau, &self.damp, &self.ar);
        let ratio = self.ln_pk[k_new - 1] - self.ln_pk[self.state.bern.k - 1] + ll_new - self.ll;
        let accepted = self.accept(ratio);
        if accepted {
            self.state.bern.k = k_new;
            std::mem::swap(&mut self.q, &mut self.q_prop);
            self.ll = ll_new;
        }
        self.acc.k.record(in_burn_in, accepted);
    }

    pub fn update_tau(&mut self, in_burn_in: bool) {
        match self.cfg.tau_update {
            TauUpdate::Conjugate => self.update_tau_conjugate(in_burn_in),
            TauUpdate::Metropolis => self.update_tau_metropolis(in_burn_in),
        }
    }

    /// With `C_n = tau * diag(q f_param^{eta-1})`, the likelihood in `tau`
    /// is `tau^{-n_used/2} exp(-Q / (2 tau))` with `Q` the quadratic form at
    /// `tau = 1`, so the full conditional is inverse-gamma.
    fn update_tau_conjugate(&mut self, in_burn_in: bool) {
        let (shape, rate) = if self.lik.flat {
            (self.prior.alpha_tau, self.prior.beta_tau)
        } else {
            let Some(quad) = self.lik.quad_unit_tau(&self.q, &self.damp, &self.ar) else {
                self.acc.tau.record(in_burn_in, false);
                return;
            };
            (
                self.prior.alpha_tau + self.n_used as f64 / 2.0,
                self.prior.beta_tau + quad / 2.0,
            )
        };
        match draw_inverse_gamma(&mut self.rng, shape, rate) {
            Some(tau) => {
                self.state.bern.tau = tau;
                self.ll = self.lik.eval(&self.q, tau, &self.damp, &self.ar);
                self.acc.tau.record(in_burn_in, true);
            }
            None => self.acc.tau.record(in_burn_in, false),
        }
    }

    fn update_tau_metropolis(&mut self, in_burn_in: bool) {
        let tau = self.state.bern.tau;
        let z: f64 = self.rng.sample(StandardNormal);
        let tau_new = tau * (self.cfg.tau_log_proposal_sd * z).exp();
        let ll_new = self.lik.eval(&self.q, tau_new, &self.damp, &self.ar);
        // Random walk on ln tau: the Jacobian adds ln(tau_new / tau).
        let ratio = self.prior.ln_p_tau(tau_new) - self.prior.ln_p_tau(tau) + ll_new - self.ll
            + (tau_new / tau).ln();
        let accepted = tau_new.is_finite() && tau_new > 0.0 && self.accept(ratio);
        if accepted {
            self.state.bern.tau = tau_new;
            self.ll = ll_new;
        }
        self.acc.tau.record(in_burn_in, accepted);
    }

    pub fn update_rho(&mut self, l: usize, in_burn_in: bool) {
        let z: f64 = self.rng.sample(StandardNormal);
        let proposal = self.state.rho.as_slice()[l] + self.rho_scale[l].sd() * z;
        let accepted = if proposal.abs() >= 1.0 {
            false
        } else {
            let mut rho = self.state.rho.as_slice().to_vec();
            rho[l] = proposal;
            let rho = PacfVector::new(rho).expect("proposal inside (-1, 1)");
            let working = ArModel::from_pacf(rho.clone(), 1.0).expect("valid pacf");
            let f_param = ar_spectral_density_grid(&working, &self.grid);
            let damp = damping(&f_param, self.state.eta);
            let ar = ArLikelihood::new(&rho);
            let ll_new = self.lik.eval(&self.q, self.state.bern.tau, &damp, &ar);
            let accepted = self.accept(ll_new - self.ll);
            if accepted {
                self.state.rho = rho;
                self.f_param = f_param;
                self.damp = damp;
                self.ar = ar;
                self.ll = ll_new;
            }
            accepted
        };
        self.rho_scale[l].record(accepted);
        self.acc.rho[l].record(in_burn_in, accepted);
    }

    pub fn update_eta(&mut self, in_burn_in: bool) {
        let z: f64 = self.rng.sample(StandardNormal);
        let eta_new = (self.state.eta + self.cfg.eta_proposal_sd * z).clamp(0.0, 1.0);
        let damp = damping(&self.f_param, eta_new);
        let ll_new = self.lik.eval(&self.q, self.state.bern.tau, &damp, &self.ar);
        let accepted = self.accept(ll_new - self.ll);
        if accepted {
            self.state.eta = eta_new;
            self.damp = damp;
            self.ll = ll_new;
        }
        self.acc.eta.record(in_burn_in, accepted);
    }

    /// One systematic-scan sweep; `it` is the 0-based sweep index.
    pub fn sweep(&mut self, it: usize) {
        let burn = it < self.cfg.burn_in;
        for l in 0..self.state.bern.v.len() {
            self.update_v(l, burn);
        }
        for l in 0..self.state.bern.w.len() {
            self.update_w(l, burn);
        }
        self.update_k(burn);
        self.update_tau(burn);
        for l in 0..self.p {
            self.update_rho(l, burn);
        }
        if self.p > 0 {
            self.update_eta(burn);
        }
        if AdaptiveScale::is_batch_end(it, self.cfg.adapt_batch, self.cfg.burn_in) {
            for s in &mut self.rho_scale {
                s.end_batch(self.cfg.adapt_target, self.cfg.adapt_step_max);
            }
        }
    }

    /// Spectral density `tau q f_param^eta` of the current state.
    pub fn current_psd(&self) -> Vec<f64> {
        let tau = self.state.bern.tau;
        let eta = self.state.eta;
        self.q
            .iter()
            .zip(&self.f_param)
            .map(|(q, f)| tau * q * f.powf(eta))
            .collect()
    }

    fn trace(&self, it: usize, retained: bool) -> TraceRecord {
        TraceRecord {
            iteration: it,
            retained,
            k: Some(self.state.bern.k),
            tau: Some(self.state.bern.tau),
            eta: Some(self.state.eta),
            sigma2: None,
            rho: self.state.rho.as_slice().to_vec(),
            rho_proposal_sd: self.rho_proposal_sd(),
            log_lik: self.ll,
        }
    }

    pub fn run(mut self) -> Result<ChainOutput> {
        let start = Instant::now();
        let mut samples = Vec::with_capacity(self.cfg.n_retained());
        let mut traces = Vec::with_capacity(self.cfg.iterations);
        for it in 0..self.cfg.iterations {
            self.sweep(it);
            let retained = self.cfg.is_retained(it);
            if retained {
                samples.push(self.current_psd());
            }
            traces.push(self.trace(it, retained));
        }
        let psd = PosteriorSpectra::new(self.grid.clone(), samples)
            .map_err(|e| Error::numeric(format!("sampler produced invalid spectra: {e}")))?;
        Ok(ChainOutput {
            method: if self.p == 0 { Method::Np } else { Method::Npc },
            order: self.p,
            psd,
            traces,
            acceptance: self.acc,
            config: self.cfg,
            wall_time: start.elapsed(),
        })
    }
}

/// Runs the corrected-likelihood sampler with working order `p`; `p = 0`
/// gives the Whittle-likelihood procedure.
pub fn run_npc(
    ts: &TimeSeries,
    p: usize,
    prior: &BernsteinDirichletConfig,
    cfg: &McmcConfig,
) -> Result<ChainOutput> {
    NpcSampler::new(ts, p, prior, cfg)?.run()
}
