//! Metropolis-within-Gibbs samplers for the corrected model, its white-noise
//! special case, and the parametric AR model.

mod adapt;
mod ar;
mod npc;
pub mod rng;

use serde::{Deserialize, Serialize};

use crate::armodels::PacfVector;
use crate::bernstein::BernsteinState;
use crate::error::{Error, Result};
use crate::postprocess::PosteriorSpectra;

pub use adapt::{adapt_step, AdaptiveScale};
pub use ar::{run_ar, ArPriorConfig, ArSampler};
pub use npc::{npc_full_conditional_logpost, run_npc, NpcSampler};

/// How `k` is updated within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KUpdate {
    /// Exact draw from the full conditional over `1..=k_max`.
    Enumerate,
    /// Metropolis step `k' = k + d`, `d` uniform on `+-1..=+-max_step`.
    RandomWalk { max_step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauUpdate {
    /// Exact inverse-gamma full conditional.
    Conjugate,
    /// Random-walk Metropolis on `ln tau` (reference implementation).
    Metropolis,
}

/// Which likelihood drives the chain. `Flat` replaces it by a constant so
/// the chain targets the prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodMode {
    Data,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    /// Total number of sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Stream index of the chain's generator.
    pub stream: u64,
    pub eta_proposal_sd: f64,
    pub rho_proposal_sd: f64,
    pub adapt_target: f64,
    pub adapt_batch: usize,
    /// Cap on the per-batch change of the log proposal scale.
    pub adapt_step_max: f64,
    pub k_update: KUpdate,
    pub tau_update: TauUpdate,
    pub tau_log_proposal_sd: f64,
    pub omit_endpoints: bool,
    pub likelihood: LikelihoodMode,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self::npc_default(0)
    }
}

impl McmcConfig {
    /// 30,000 burn-in sweeps followed by 20,000 kept with thinning 4.
    pub fn npc_default(seed: u64) -> Self {
        Self {
            iterations: 50_000,
            burn_in: 30_000,
            thin: 4,
            seed,
            stream: 0,
            eta_proposal_sd: 0.1,
            rho_proposal_sd: 0.1,
            adapt_target: 0.44,
            adapt_batch: 50,
            adapt_step_max: 0.05,
            k_update: KUpdate::Enumerate,
            tau_update: TauUpdate::Conjugate,
            tau_log_proposal_sd: 0.5,
            omit_endpoints: true,
            likelihood: LikelihoodMode::Data,
        }
    }

    /// 8,000 burn-in sweeps followed by 12,000 kept.
    pub fn ar_default(seed: u64) -> Self {
        Self {
            iterations: 20_000,
            burn_in: 8_000,
            thin: 1,
            ..Self::npc_default(seed)
        }
    }

    /// Run lengths divided by `factor`, thinning unchanged.
    pub fn scaled_down(&self, factor: usize) -> Self {
        Self {
            iterations: (self.iterations / factor).max(2),
            burn_in: self.burn_in / factor,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64, stream: u64) -> Self {
        Self {
            seed,
            stream,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.thin == 0 {
            return Err(Error::invalid("iterations and thin must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.eta_proposal_sd) || !pos(self.rho_proposal_sd) || !pos(self.tau_log_proposal_sd)
        {
            return Err(Error::invalid("proposal standard deviations must be positive"));
        }
        if !(self.adapt_target > 0.0 && self.adapt_target < 1.0) {
            return Err(Error::invalid("adapt_target must lie in (0, 1)"));
        }
        if self.adapt_batch == 0 || !pos(self.adapt_step_max) {
            return Err(Error::invalid("adapt_batch and adapt_step_max must be positive"));
        }
        if let KUpdate::RandomWalk { max_step } = self.k_update {
            if max_step == 0 {
                return Err(Error::invalid("k random-walk step must be positive"));
            }
        }
        Ok(())
    }

    /// Number of stored draws, `floor((iterations - burn_in) / thin)`.
    pub fn n_retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    pub(crate) fn is_retained(&self, iteration: usize) -> bool {
        iteration >= self.burn_in && (iteration - self.burn_in + 1) % self.thin == 0
    }
}

/// Full state of the corrected model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcState {
    pub bern: BernsteinState,
    pub rho: PacfVector,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ar,
    Np,
    Npc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ar => "ar",
            Method::Np => "np",
            Method::Npc => "npc",
        }
    }
}

/// Proposal and acceptance counts, split at the end of burn-in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceCounts {
    pub burn_in_proposed: u64,
    pub burn_in_accepted: u64,
    pub proposed: u64,
    pub accepted: u64,
}

impl AcceptanceCounts {
    pub(crate) fn record(&mut self, in_burn_in: bool, accepted: bool) {
        if in_burn_in {
            self.burn_in_proposed += 1;
            self.burn_in_accepted += accepted as u64;
        } else {
            self.proposed += 1;
            self.accepted += accepted as u64;
        }
    }

    /// Acceptance rate after burn-in.
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceSummary {
    pub v: AcceptanceCounts,
    pub w: AcceptanceCounts,
    pub k: AcceptanceCounts,
    pub tau: AcceptanceCounts,
    pub eta: AcceptanceCounts,
    pub rho: Vec<AcceptanceCounts>,
}

/// Parameter values at the end of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub retained: bool,
    pub k: Option<usize>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub sigma2: Option<f64>,
    pub rho: Vec<f64>,
    pub rho_proposal_sd: Vec<f64>,
    pub log_lik: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainOutput {
    pub method: Method,
    pub order: usize,
    pub psd: PosteriorSpectra,
    pub traces: Vec<TraceRecord>,
    pub acceptance: AcceptanceSummary,
    pub config: McmcConfig,
    /// Elapsed time; not serialized and ignored by equality.
    #[serde(skip)]
    pub wall_time: std::time::Duration,
}

impl PartialEq for ChainOutput {
    fn eq(&self, other: &Self) -> bool {
        self.method == other.method
            && self.order == other.order
            && self.psd == other.psd
            && self.traces == other.traces
            && self.acceptance == other.acceptance
            && self.config == other.config
    }
}

impl ChainOutput {
    pub fn retained(&self) -> impl Iterator<Item = &TraceRecord> {
        self.traces.iter().filter(|t| t.retained)
    }

    fn retained_mean(&self, f: impl Fn(&TraceRecord) -> Option<f64>) -> Option<f64> {
        let vals: Vec<f64> = self.retained().filter_map(f).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    pub fn posterior_mean_eta(&self) -> Option<f64> {
        self.retained_mean(|t| t.eta)
    }

    pub fn posterior_mean_tau(&self) -> Option<f64> {
        self.retained_mean(|t| t.tau)
    }

    pub fn posterior_mean_sigma2(&self) -> Option<f64> {
        self.retained_mean(|t| t.sigma2)
    }

    pub fn posterior_mean_k(&self) -> Option<f64> {
        self.retained_mean(|t| t.k.map(|k| k as f64))
    }

    pub fn posterior_mean_rho(&self) -> Vec<f64> {
        (0..self.order)
            .map(|l| self.retained_mean(|t| Some(t.rho[l])).unwrap_or(f64::NAN))
            .collect()
    }

    /// Post-burn-in acceptance rate of each partial autocorrelation.
    pub fn rho_acceptance_rates(&self) -> Vec<f64> {
        self.acceptance.rho.iter().map(|c| c.rate()).collect()
    }
}
