//! Bayesian AR(p) sampler with uniform priors on the partial
//! autocorrelations and an inverse-gamma prior on the innovation variance.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use super::adapt::AdaptiveScale;
use super::npc::draw_inverse_gamma;
use super::rng::chain_rng;
use super::{AcceptanceSummary, ChainOutput, LikelihoodMode, McmcConfig, Method, TraceRecord};
use crate::armodels::{ar_spectral_density_grid, yule_walker_fit, ArLikelihood, ArModel, PacfVector};
use crate::error::{Error, Result};
use crate::fourier::{fourier_frequencies, FrequencyGrid, TimeSeries};
use crate::postprocess::PosteriorSpectra;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArPriorConfig {
    pub alpha_sigma: f64,
    pub beta_sigma: f64,
}

impl Default for ArPriorConfig {
    fn default() -> Self {
        Self {
            alpha_sigma: 0.001,
            beta_sigma: 0.001,
        }
    }
}

impl ArPriorConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.alpha_sigma) || !pos(self.beta_sigma) {
            return Err(Error::invalid("alpha_sigma and beta_sigma must be positive"));
        }
        Ok(())
    }
}

/// Gibbs sampler over `(rho, sigma2)`: conjugate inverse-gamma draws of
/// `sigma2` and adaptive random-walk Metropolis steps for each `rho_l`
/// under the exact Gaussian AR likelihood.
#[derive(Debug, Clone)]
pub struct ArSampler {
    prior: ArPriorConfig,
    cfg: McmcConfig,
    p: usize,
    z: Vec<f64>,
    grid: FrequencyGrid,
    flat: bool,
    rho: PacfVector,
    sigma2: f64,
    ar: ArLikelihood,
    quad: f64,
    log_det: f64,
    rng: ChaCha8Rng,
    rho_scale: Vec<AdaptiveScale>,
    acc: AcceptanceSummary,
}

impl ArSampler {
    /// Starts from the Yule–Walker fit of order `p`.
    pub fn new(ts: &TimeSeries, p: usize, prior: &ArPriorConfig, cfg: &McmcConfig) -> Result<Self> {
        let n = ts.len();
        if n <= p {
            return Err(Error::invalid(format!(
                "series length {n} must exceed the AR order {p}"
            )));
        }
        let fit = yule_walker_fit(ts, p)?;
        Self::with_state(ts, prior, cfg, fit.pacf().clone(), fit.sigma2())
    }

    pub fn with_state(
        ts: &TimeSeries,
        prior: &ArPriorConfig,
        cfg: &McmcConfig,
        rho: PacfVector,
        sigma2: f64,
    ) -> Result<Self> {
        prior.validate()?;
        cfg.validate()?;
        let p = rho.order();
        if ts.len() <= p {
            return Err(Error::invalid("series length must exceed the AR order"));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::invalid("initial sigma2 must be positive"));
        }
        let z = ts.values().to_vec();
        let ar = ArLikelihood::new(&rho);
        let quad = ar.quadratic_form(&z);
        let log_det = ar.log_det(z.len());
        Ok(Self {
            prior: *prior,
            cfg: cfg.clone(),
            p,
            grid: fourier_frequencies(z.len())?,
            z,
            flat: cfg.likelihood == LikelihoodMode::Flat,
            rho,
            sigma2,
            ar,
            quad,
            log_det,
            rng: chain_rng(cfg.seed, cfg.stream),
            rho_scale: vec![AdaptiveScale::new(cfg.rho_proposal_sd); p],
            acc: AcceptanceSummary {
                rho: vec![Default::default(); p],
                ..Default::default()
            },
        })
    }

    pub fn rho(&self) -> &PacfVector {
        &self.rho
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    fn log_lik_parts(&self, quad: f64, log_det: f64, sigma2: f64) -> f64 {
        if self.flat {
            return 0.0;
        }
        let n = self.z.len() as f64;
        -0.5 * (n * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln()) + log_det)
            - 0.5 * quad / sigma2
    }

    pub fn log_lik(&self) -> f64 {
        self.log_lik_parts(self.quad, self.log_det, self.sigma2)
    }

    pub fn update_sigma2(&mut self) {
        let (shape, rate) = if self.flat {
            (self.prior.alpha_sigma, self.prior.beta_sigma)
        } else {
            (
                self.prior.alpha_sigma + self.z.len() as f64 / 2.0,
                self.prior.beta_sigma + self.quad / 2.0,
            )
        };
        if let Some(s) = draw_inverse_gamma(&mut self.rng, shape, rate) {
            self.sigma2 = s;
        }
    }

    pub fn update_rho(&mut self, l: usize, in_burn_in: bool) {
        let z: f64 = self.rng.sample(StandardNormal);
        let proposal = self.rho.as_slice()[l] + self.rho_scale[l].sd() * z;
        let accepted = if proposal.abs() >= 1.0 {
            false
        } else {
            let mut rho = self.rho.as_slice().to_vec();
            rho[l] = proposal;
            let rho = PacfVector::new(rho).expect("proposal inside (-1, 1)");
            let ar = ArLikelihood::new(&rho);
            let quad = ar.quadratic_form(&self.z);
            let log_det = ar.log_det(self.z.len());
            let ratio = self.log_lik_parts(quad, log_det, self.sigma2) - self.log_lik();
            let u: f64 = self.rng.sample(Open01);
            let accepted = ratio >= 0.0 || u.ln() < ratio;
            if accepted {
                self.rho = rho;
                self.ar = ar;
                self.quad = quad;
                self.log_det = log_det;
            }
            accepted
        };
        self.rho_scale[l].record(accepted);
        self.acc.rho[l].record(in_burn_in, accepted);
    }

    pub fn sweep(&mut self, it: usize) {
        let burn = it < self.cfg.burn_in;
        self.update_sigma2();
        for l in 0..self.p {
            self.update_rho(l, burn);
        }
        if AdaptiveScale::is_batch_end(it, self.cfg.adapt_batch, self.cfg.burn_in) {
            for s in &mut self.rho_scale {
                s.end_batch(self.cfg.adapt_target, self.cfg.adapt_step_max);
            }
        }
    }

    pub fn current_psd(&self) -> Vec<f64> {
        let model = ArModel::from_pacf(self.rho.clone(), self.sigma2).expect("valid state");
        ar_spectral_density_grid(&model, &self.grid)
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
            traces.push(TraceRecord {
                iteration: it,
                retained,
                k: None,
                tau: None,
                eta: None,
                sigma2: Some(self.sigma2),
                rho: self.rho.as_slice().to_vec(),
                rho_proposal_sd: self.rho_scale.iter().map(|s| s.sd()).collect(),
                log_lik: self.log_lik(),
            });
        }
        let psd = PosteriorSpectra::new(self.grid.clone(), samples)
            .map_err(|e| Error::numeric(format!("sampler produced invalid spectra: {e}")))?;
        Ok(ChainOutput {
            method: Method::Ar,
            order: self.p,
            psd,
            traces,
            acceptance: self.acc,
            config: self.cfg,
            wall_time: start.elapsed(),
        })
    }
}

pub fn run_ar(
    ts: &TimeSeries,
    p: usize,
    prior: &ArPriorConfig,
    cfg: &McmcConfig,
) -> Result<ChainOutput> {
    ArSampler::new(ts, p, prior, cfg)?.run()
}
