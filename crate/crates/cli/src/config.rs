//! TOML run configuration of the `fit` command. Command-line flags take
//! precedence over the file, which takes precedence over built-in defaults.

use std::path::{Path, PathBuf};

use npc_core::benchmark::RunLengths;
use npc_core::bernstein::{BaseDensity, BernsteinDirichletConfig};
use npc_core::mcmc::{ArPriorConfig, KUpdate, McmcConfig, TauUpdate};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Ar,
    Np,
    Npc,
}

/// Working order: a number or `"dic"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSetting {
    Dic,
    Fixed(usize),
}

impl std::str::FromStr for OrderSetting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "dic" {
            return Ok(OrderSetting::Dic);
        }
        s.parse()
            .map(OrderSetting::Fixed)
            .map_err(|_| format!("order must be a non-negative integer or \"dic\", got {s:?}"))
    }
}

impl<'de> Deserialize<'de> for OrderSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(p) => Ok(OrderSetting::Fixed(p as usize)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    /// Divides the default run lengths before explicit lengths apply.
    pub scale_down: Option<usize>,
    pub eta_proposal_sd: Option<f64>,
    pub rho_proposal_sd: Option<f64>,
    pub k_update: Option<KUpdate>,
    pub tau_update: Option<TauUpdate>,
    pub omit_endpoints: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub m: Option<f64>,
    pub g0: Option<BaseDensity>,
    pub theta_k: Option<f64>,
    pub k_max: Option<usize>,
    pub alpha_tau: Option<f64>,
    pub beta_tau: Option<f64>,
    pub l: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Relative paths are resolved against the directory of the file.
    pub data: Option<PathBuf>,
    pub method: Option<FitMethod>,
    pub order: Option<OrderSetting>,
    pub seed: Option<u64>,
    pub center: Option<bool>,
    pub difference: Option<bool>,
    pub p_max: Option<usize>,
    pub alpha: Option<f64>,
    pub xi: Option<f64>,
    pub write_samples: Option<bool>,
    pub output_dir: Option<PathBuf>,
    pub mcmc: Option<McmcSection>,
    /// Run lengths of the AR chains of the order scan.
    pub scan: Option<RunLengths>,
    pub prior: Option<PriorSection>,
    pub ar_prior: Option<ArPriorConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = crate::io::read_text(path)?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

impl McmcSection {
    pub fn apply(&self, base: McmcConfig) -> McmcConfig {
        let mut c = match self.scale_down {
            Some(f) if f > 1 => base.scaled_down(f),
            _ => base,
        };
        if let Some(v) = self.iterations {
            c.iterations = v;
        }
        if let Some(v) = self.burn_in {
            c.burn_in = v;
        }
        if let Some(v) = self.thin {
            c.thin = v;
        }
        if let Some(v) = self.eta_proposal_sd {
            c.eta_proposal_sd = v;
        }
        if let Some(v) = self.rho_proposal_sd {
            c.rho_proposal_sd = v;
        }
        if let Some(v) = self.k_update {
            c.k_update = v;
        }
        if let Some(v) = self.tau_update {
            c.tau_update = v;
        }
        if let Some(v) = self.omit_endpoints {
            c.omit_endpoints = v;
        }
        c
    }
}

impl PriorSection {
    pub fn apply(&self, mut c: BernsteinDirichletConfig) -> BernsteinDirichletConfig {
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.g0 {
            c.g0 = v;
        }
        if let Some(v) = self.theta_k {
            c.theta_k = v;
        }
        if let Some(v) = self.k_max {
            c.k_max = v;
        }
        if let Some(v) = self.alpha_tau {
            c.alpha_tau = v;
        }
        if let Some(v) = self.beta_tau {
            c.beta_tau = v;
        }
        if let Some(v) = self.l {
            c.l = v;
        }
        c
    }
}
