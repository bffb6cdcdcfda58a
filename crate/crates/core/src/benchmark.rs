//! Replicated simulation study comparing the AR, NP and NPC estimators on
//! ARMA data: integrated absolute error of the posterior median, coverage of
//! the uniform band, and the posterior mean of `eta`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::armodels::{simulate_arma, ArmaSpec};
use crate::bernstein::BernsteinDirichletConfig;
use crate::error::{Error, Result};
use crate::fourier::fourier_frequencies;
use crate::likelihood::{SpectralGridValues, SpectralRole};
use crate::mcmc::rng::derive_seed;
use crate::mcmc::{run_ar, run_npc, ArPriorConfig, ChainOutput, KUpdate, McmcConfig};
use crate::modelselect::select_order_with_chains;
use crate::postprocess::{
    band_covers, integrated_absolute_error, interior_mask, median, posterior_median_psd,
    uniform_credible_band_masked,
};

/// Working order of an AR or NPC fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderChoice {
    Dic,
    Fixed(usize),
}

/// Estimator run on each replicate, written `ar:dic`, `ar:3`, `np`,
/// `npc:dic` or `npc:1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    Ar(OrderChoice),
    Np,
    Npc(OrderChoice),
}

impl MethodSpec {
    pub fn uses_dic(&self) -> bool {
        matches!(
            self,
            MethodSpec::Ar(OrderChoice::Dic) | MethodSpec::Npc(OrderChoice::Dic)
        )
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = |o: &OrderChoice| match o {
            OrderChoice::Dic => "dic".to_string(),
            OrderChoice::Fixed(p) => p.to_string(),
        };
        match self {
            MethodSpec::Ar(o) => write!(f, "ar:{}", order(o)),
            MethodSpec::Np => write!(f, "np"),
            MethodSpec::Npc(o) => write!(f, "npc:{}", order(o)),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unknown method {s:?}"));
        if s == "np" {
            return Ok(MethodSpec::Np);
        }
        let (head, tail) = s.split_once(':').ok_or_else(bad)?;
        let order = match tail {
            "dic" => OrderChoice::Dic,
            t => OrderChoice::Fixed(t.parse().map_err(|_| bad())?),
        };
        match head {
            "ar" => Ok(MethodSpec::Ar(order)),
            "npc" => Ok(MethodSpec::Npc(order)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// 64 replicates, chain lengths divided by 4, random-walk `k` updates.
    #[default]
    Desk,
    /// 1024 replicates, full chain lengths, enumerated `k` updates.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunLengths {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub ar: Vec<f64>,
    #[serde(default)]
    pub ma: Vec<f64>,
    pub n: usize,
    /// Overrides the scale default.
    #[serde(default)]
    pub replicates: Option<usize>,
    pub methods: Vec<MethodSpec>,
}

fn default_alpha() -> f64 {
    0.1
}
fn default_xi() -> f64 {
    0.001
}
fn default_p_max() -> usize {
    15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub scale: Scale,
    /// Excluded posterior mass of the uniform band.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Offset of the Fuller logarithm.
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default = "default_p_max")]
    pub p_max: usize,
    #[serde(default)]
    pub k_update: Option<KUpdate>,
    #[serde(default)]
    pub npc_run: Option<RunLengths>,
    #[serde(default)]
    pub ar_run: Option<RunLengths>,
    pub scenarios: Vec<ScenarioSpec>,
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::invalid("benchmark needs at least one scenario"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) || !(self.xi > 0.0) {
            return Err(Error::invalid("alpha must lie in (0, 1) and xi be positive"));
        }
        let mut names: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate scenario name {:?}", w[0])));
        }
        for s in &self.scenarios {
            ArmaSpec::new(s.ar.clone(), s.ma.clone())?;
            if s.replicates == Some(0) {
                return Err(Error::invalid(format!("scenario {}: replicates must be >= 1", s.name)));
            }
            if s.methods.is_empty() {
                return Err(Error::invalid(format!("scenario {}: no methods", s.name)));
            }
            if s.n < crate::fourier::MIN_SERIES_LEN || self.p_max >= s.n {
                return Err(Error::invalid(format!(
                    "scenario {}: n must be >= 4 and exceed p_max",
                    s.name
                )));
            }
            for m in &s.methods {
                if let MethodSpec::Ar(OrderChoice::Fixed(p)) | MethodSpec::Npc(OrderChoice::Fixed(p)) = m {
                    if *p >= s.n {
                        return Err(Error::invalid(format!("scenario {}: order {p} >= n", s.name)));
                    }
                }
            }
        }
        self.npc_config(0).validate()?;
        self.ar_config(0).validate()?;
        Ok(())
    }

    pub fn replicates(&self, scenario: &ScenarioSpec) -> usize {
        scenario.replicates.unwrap_or(match self.scale {
            Scale::Desk => 64,
            Scale::Paper => 1024,
        })
    }

    fn apply(base: McmcConfig, scale: Scale, over: Option<RunLengths>) -> McmcConfig {
        let cfg = match scale {
            Scale::Desk => base.scaled_down(4),
            Scale::Paper => base,
        };
        match over {
            Some(r) => McmcConfig {
                iterations: r.iterations,
                burn_in: r.burn_in,
                thin: r.thin,
                ..cfg
            },
            None => cfg,
        }
    }

    fn k_update(&self) -> KUpdate {
        self.k_update.unwrap_or(match self.scale {
            Scale::Desk => KUpdate::RandomWalk { max_step: 5 },
            Scale::Paper => KUpdate::Enumerate,
        })
    }

    /// Sampler settings of the NP and NPC chains.
    pub fn npc_config(&self, seed: u64) -> McmcConfig {
        McmcConfig {
            k_update: self.k_update(),
            ..Self::apply(McmcConfig::npc_default(seed), self.scale, self.npc_run)
        }
    }

    /// Sampler settings of the AR chains, order scan included.
    pub fn ar_config(&self, seed: u64) -> McmcConfig {
        Self::apply(McmcConfig::ar_default(seed), self.scale, self.ar_run)
    }
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub scenario: String,
    pub replicate: usize,
    pub data_seed: u64,
    pub method: MethodSpec,
    pub order: Option<usize>,
    pub iae: Option<f64>,
    pub covers: Option<bool>,
    pub eta_mean: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub scenario: String,
    pub n: usize,
    pub method: MethodSpec,
    pub replicates: usize,
    pub failed: usize,
    /// Mean over replicates of the IAE of the posterior median.
    pub aiae: f64,
    pub iae_median: f64,
    /// Fraction of replicates whose uniform band covers the truth.
    pub cuci: f64,
    pub eta_hat: Option<f64>,
    pub mean_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub spec: BenchmarkSpec,
    pub npc_config: McmcConfig,
    pub ar_config: McmcConfig,
    pub rng: String,
    pub seed_derivation: String,
    pub summaries: Vec<MethodSummary>,
    pub replicates: Vec<ReplicateResult>,
}

struct Evaluated {
    order: usize,
    iae: f64,
    covers: bool,
    eta_mean: Option<f64>,
}

fn evaluate(chain: &ChainOutput, truth: &SpectralGridValues, alpha: f64, xi: f64) -> Result<Evaluated> {
    let grid = &chain.psd.grid;
    let med = posterior_median_psd(&chain.psd)?;
    let band = uniform_credible_band_masked(&chain.psd, alpha, xi, &interior_mask(grid))?;
    Ok(Evaluated {
        order: chain.order,
        iae: integrated_absolute_error(&med, truth, grid)?,
        covers: band_covers(&band, truth),
        eta_mean: chain.posterior_mean_eta(),
    })
}

fn method_seed(spec: &BenchmarkSpec, scenario: &str, tag: &str, r: usize) -> u64 {
    derive_seed(spec.master_seed, &format!("{scenario}#{tag}"), r as u64)
}

fn run_replicate(spec: &BenchmarkSpec, sc: &ScenarioSpec, r: usize) -> Vec<ReplicateResult> {
    let data_seed = derive_seed(spec.master_seed, &sc.name, r as u64);
    let failed = |m: MethodSpec, e: &Error| ReplicateResult {
        scenario: sc.name.clone(),
        replicate: r,
        data_seed,
        method: m,
        order: None,
        iae: None,
        covers: None,
        eta_mean: None,
        error: Some(e.to_string()),
    };
    let setup = (|| {
        let arma = ArmaSpec::new(sc.ar.clone(), sc.ma.clone())?;
        let ts = simulate_arma(&arma, sc.n, data_seed)?;
        let grid = fourier_frequencies(sc.n)?;
        let truth = SpectralGridValues::new(arma.spectral_density_grid(&grid), SpectralRole::TruePsd);
        Ok::<_, Error>((ts, truth))
    })();
    let (ts, truth) = match setup {
        Ok(v) => v,
        Err(e) => return sc.methods.iter().map(|&m| failed(m, &e)).collect(),
    };
    let ar_prior = ArPriorConfig::default();
    let npc_prior = BernsteinDirichletConfig::for_series_len(sc.n);
    let scan = if sc.methods.iter().any(MethodSpec::uses_dic) {
        let cfg = spec.ar_config(method_seed(spec, &sc.name, "scan", r));
        Some(select_order_with_chains(&ts, spec.p_max, &ar_prior, &cfg))
    } else {
        None
    };
    sc.methods
        .iter()
        .map(|&m| {
            let seed = method_seed(spec, &sc.name, &m.to_string(), r);
            let outcome = (|| {
                let dic_order = || match &scan {
                    Some(Ok((s, _))) => Ok(s.selected_dic),
                    Some(Err(e)) => Err(e.clone()),
                    None => Err(Error::invalid("order scan missing")),
                };
                let chain = match m {
                    MethodSpec::Ar(OrderChoice::Dic) => {
                        let p = dic_order()?;
                        let Some(Ok((_, chains))) = &scan else { unreachable!() };
                        return evaluate(&chains[p], &truth, spec.alpha, spec.xi);
                    }
                    MethodSpec::Ar(OrderChoice::Fixed(p)) => {
                        run_ar(&ts, p, &ar_prior, &spec.ar_config(seed))?
                    }
                    MethodSpec::Np => run_npc(&ts, 0, &npc_prior, &spec.npc_config(seed))?,
                    MethodSpec::Npc(o) => {
                        let p = match o {
                            OrderChoice::Dic => dic_order()?,
                            OrderChoice::Fixed(p) => p,
                        };
                        run_npc(&ts, p, &npc_prior, &spec.npc_config(seed))?
                    }
                };
                evaluate(&chain, &truth, spec.alpha, spec.xi)
            })();
            match outcome {
                Ok(ev) => ReplicateResult {
                    scenario: sc.name.clone(),
                    replicate: r,
                    data_seed,
                    method: m,
                    order: Some(ev.order),
                    iae: Some(ev.iae),
                    covers: Some(ev.covers),
                    eta_mean: ev.eta_mean,
                    error: None,
                },
                Err(e) => failed(m, &e),
            }
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn summarize(spec: &BenchmarkSpec, results: &[ReplicateResult]) -> Vec<MethodSummary> {
    let mut out = Vec::new();
    for sc in &spec.scenarios {
        for &m in &sc.methods {
            let rows: Vec<&ReplicateResult> = results
                .iter()
                .filter(|r| r.scenario == sc.name && r.method == m)
                .collect();
            let ok: Vec<&&ReplicateResult> = rows.iter().filter(|r| r.error.is_none()).collect();
            let iae: Vec<f64> = ok.iter().filter_map(|r| r.iae).collect();
            let covered = ok.iter().filter(|r| r.covers == Some(true)).count();
            let etas: Vec<f64> = ok.iter().filter_map(|r| r.eta_mean).collect();
            let orders: Vec<f64> = ok.iter().filter_map(|r| r.order.map(|p| p as f64)).collect();
            out.push(MethodSummary {
                scenario: sc.name.clone(),
                n: sc.n,
                method: m,
                replicates: rows.len(),
                failed: rows.len() - ok.len(),
                aiae: mean(&iae),
                iae_median: if iae.is_empty() { f64::NAN } else { median(&iae) },
                cuci: covered as f64 / ok.len() as f64,
                eta_hat: (!etas.is_empty()).then(|| mean(&etas)),
                mean_order: (!orders.is_empty()).then(|| mean(&orders)),
            });
        }
    }
    out
}

/// Runs every scenario with replicates spread over a pool of `workers`
/// threads. Results are ordered by scenario, replicate and method regardless
/// of scheduling.
pub fn run_benchmark(spec: &BenchmarkSpec, workers: usize) -> Result<BenchmarkReport> {
    spec.validate()?;
    let jobs: Vec<(&ScenarioSpec, usize)> = spec
        .scenarios
        .iter()
        .flat_map(|sc| (0..spec.replicates(sc)).map(move |r| (sc, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::numeric(format!("thread pool: {e}")))?;
    let replicates: Vec<ReplicateResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(sc, r)| run_replicate(spec, sc, r))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    Ok(BenchmarkReport {
        spec: spec.clone(),
        npc_config: spec.npc_config(0),
        ar_config: spec.ar_config(0),
        rng: "ChaCha8 (rand_chacha), seed_from_u64 then set_stream".into(),
        seed_derivation: "first 8 bytes (little endian) of SHA-256(master_seed_le || label || replicate_le); \
            label is the scenario name for data, name#scan for the order scan, name#<method> for chains"
            .into(),
        summaries: summarize(spec, &replicates),
        replicates,
    })
}

impl BenchmarkReport {
    pub fn n_failed(&self) -> usize {
        self.replicates.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn failure_fraction(&self) -> f64 {
        self.n_failed() as f64 / self.replicates.len().max(1) as f64
    }

    pub fn summary(&self, scenario: &str, method: MethodSpec) -> Option<&MethodSummary> {
        self.summaries
            .iter()
            .find(|s| s.scenario == scenario && s.method == method)
    }

    /// Table with one row per metric and method and one column per scenario.
    pub fn table_csv(&self) -> String {
        let names: Vec<&str> = self.spec.scenarios.iter().map(|s| s.name.as_str()).collect();
        let mut methods: Vec<MethodSpec> = Vec::new();
        for s in &self.summaries {
            if !methods.contains(&s.method) {
                methods.push(s.method);
            }
        }
        let mut out = format!("metric,method,{}\n", names.join(","));
        let metrics: [(&str, fn(&MethodSummary) -> Option<f64>); 4] = [
            ("aIAE", |s| Some(s.aiae)),
            ("median_IAE", |s| Some(s.iae_median)),
            ("cUCI", |s| Some(s.cuci)),
            ("eta_hat", |s| s.eta_hat),
        ];
        for (label, get) in metrics {
            for &m in &methods {
                let cells: Vec<String> = names
                    .iter()
                    .map(|n| {
                        self.summary(n, m)
                            .and_then(get)
                            .map(|v| v.to_string())
                            .unwrap_or_default()
                    })
                    .collect();
                if label == "eta_hat" && cells.iter().all(String::is_empty) {
                    continue;
                }
                out.push_str(&format!("{label},{m},{}\n", cells.join(",")));
            }
        }
        out
    }

    pub fn replicates_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("scenario,replicate,data_seed,method,order,iae,covers,eta_mean,error\n");
        for r in &self.replicates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.scenario,
                r.replicate,
                r.data_seed,
                r.method,
                r.order.map(|p| p.to_string()).unwrap_or_default(),
                opt(r.iae),
                r.covers.map(|c| c.to_string()).unwrap_or_default(),
                opt(r.eta_mean),
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> BenchmarkSpec {
        BenchmarkSpec {
            master_seed: 7,
            scale: Scale::Desk,
            alpha: 0.1,
            xi: 0.001,
            p_max: 2,
            k_update: None,
            npc_run: Some(RunLengths { iterations: 300, burn_in: 100, thin: 2 }),
            ar_run: Some(RunLengths { iterations: 300, burn_in: 100, thin: 1 }),
            scenarios: vec![ScenarioSpec {
                name: "ar1".into(),
                ar: vec![0.5],
                ma: vec![],
                n: 32,
                replicates: Some(3),
                methods: vec![
                    "ar:dic".parse().unwrap(),
                    "np".parse().unwrap(),
                    "npc:1".parse().unwrap(),
                ],
            }],
        }
    }

    #[test]
    fn method_strings_roundtrip() {
        for s in ["ar:dic", "ar:3", "np", "npc:dic", "npc:0"] {
            assert_eq!(s.parse::<MethodSpec>().unwrap().to_string(), s);
        }
        for s in ["", "npc", "ar:x", "foo:1", "np:1"] {
            assert!(s.parse::<MethodSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn desk_scale_shrinks_runs() {
        let spec = tiny_spec();
        let desk = BenchmarkSpec { npc_run: None, ar_run: None, ..spec.clone() };
        assert_eq!(desk.npc_config(0).iterations, 12_500);
        assert_eq!(desk.ar_config(0).burn_in, 2_000);
        let sc = ScenarioSpec { replicates: None, ..spec.scenarios[0].clone() };
        assert_eq!(desk.replicates(&sc), 64);
        let paper = BenchmarkSpec { scale: Scale::Paper, ..desk };
        assert_eq!(paper.npc_config(0).iterations, 50_000);
        assert_eq!(paper.npc_config(0).k_update, KUpdate::Enumerate);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut s = tiny_spec();
        s.scenarios.push(s.scenarios[0].clone());
        assert!(s.validate().is_err());
        let mut s = tiny_spec();
        s.scenarios[0].replicates = Some(0);
        assert!(s.validate().is_err());
        let mut s = tiny_spec();
        s.scenarios[0].ar = vec![1.2];
        assert!(s.validate().is_err());
    }

    #[test]
    fn tiny_run_is_deterministic_and_independent_of_workers() {
        let spec = tiny_spec();
        let a = run_benchmark(&spec, 1).unwrap();
        let b = run_benchmark(&spec, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replicates.len(), 9);
        assert_eq!(a.n_failed(), 0);
        let table = a.table_csv();
        assert!(table.starts_with("metric,method,ar1\n"));
        assert!(table.contains("eta_hat,npc:1,"));
        assert!(!table.contains("eta_hat,ar:dic"));
        assert_eq!(a.replicates_csv().lines().count(), 10);
        let s = a.summary("ar1", MethodSpec::Np).unwrap();
        assert_eq!(s.eta_hat, Some(0.0));
        assert!(s.aiae > 0.0 && s.cuci >= 0.0 && s.cuci <= 1.0);
    }
}
