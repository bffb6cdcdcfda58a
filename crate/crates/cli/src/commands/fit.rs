use std::path::PathBuf;
use std::time::Instant;

use npc_core::bernstein::BernsteinDirichletConfig;
use npc_core::fourier::{periodogram, Preprocessing, TimeSeries};
use npc_core::mcmc::rng::derive_seed;
use npc_core::mcmc::{
    run_ar, run_npc, AcceptanceCounts, ArPriorConfig, ChainOutput, KUpdate, McmcConfig, Method,
};
use npc_core::modelselect::{select_order_with_chains, OrderScan};
use npc_core::postprocess::{
    interior_mask, pointwise_credible_band, posterior_median_psd, quantile_sorted,
    uniform_credible_band_masked, CredibleBand,
};
use serde::Serialize;

use super::order_scan::write_scan;
use super::preprocess;
use crate::config::{FitMethod, McmcSection, OrderSetting, PriorSection, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, opt, read_series, write_json, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KUpdateArg {
    Enumerate,
    RandomWalk,
}

#[derive(clap::Args)]
pub struct Args {
    /// TOML run configuration; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV series with a `value` column.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<FitMethod>,
    /// Working order: an integer or `dic`.
    #[arg(long)]
    order: Option<OrderSetting>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Subtract the sample mean.
    #[arg(long)]
    center: bool,
    /// Take first differences (before centering).
    #[arg(long)]
    difference: bool,
    /// Also write every retained PSD draw to samples.csv.
    #[arg(long)]
    write_samples: bool,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Divide the default run lengths by this factor.
    #[arg(long)]
    scale_down: Option<usize>,
    #[arg(long, value_enum)]
    k_update: Option<KUpdateArg>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Largest order of the DIC scan.
    #[arg(long)]
    p_max: Option<usize>,
    /// Excluded posterior mass of the credible bands.
    #[arg(long)]
    alpha: Option<f64>,
    /// Offset of the Fuller logarithm.
    #[arg(long)]
    xi: Option<f64>,
}

struct Plan {
    data: PathBuf,
    out_dir: PathBuf,
    method: FitMethod,
    order: OrderSetting,
    seed: u64,
    center: bool,
    difference: bool,
    write_samples: bool,
    p_max: usize,
    alpha: f64,
    xi: f64,
    mcmc: McmcSection,
    scan: Option<npc_core::benchmark::RunLengths>,
    prior: PriorSection,
    ar_prior: ArPriorConfig,
}

fn resolve(args: Args) -> CliResult<Plan> {
    let file = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let data = args
        .data
        .or(file.data)
        .ok_or_else(|| CliError::Config("no data file given (--data or `data`)".into()))?;
    let out_dir = args
        .out_dir
        .or(file.output_dir)
        .ok_or_else(|| CliError::Config("no output directory given (--out-dir or `output_dir`)".into()))?;
    let method = args.method.or(file.method).unwrap_or(FitMethod::Npc);
    let order = args.order.or(file.order).unwrap_or(match method {
        FitMethod::Np => OrderSetting::Fixed(0),
        _ => OrderSetting::Dic,
    });
    if method == FitMethod::Np && order != OrderSetting::Fixed(0) {
        return Err(CliError::Config("method np has working order 0".into()));
    }
    let mut mcmc = file.mcmc.unwrap_or_default();
    mcmc.iterations = args.iterations.or(mcmc.iterations);
    mcmc.burn_in = args.burn_in.or(mcmc.burn_in);
    mcmc.thin = args.thin.or(mcmc.thin);
    mcmc.scale_down = args.scale_down.or(mcmc.scale_down);
    if let Some(k) = args.k_update {
        mcmc.k_update = Some(match k {
            KUpdateArg::Enumerate => KUpdate::Enumerate,
            KUpdateArg::RandomWalk => KUpdate::RandomWalk { max_step: 5 },
        });
    }
    let mut prior = file.prior.unwrap_or_default();
    prior.k_max = args.k_max.or(prior.k_max);
    let alpha = args.alpha.or(file.alpha).unwrap_or(0.1);
    let xi = args.xi.or(file.xi).unwrap_or(0.001);
    if !(alpha > 0.0 && alpha < 1.0) || !(xi > 0.0) {
        return Err(CliError::Config("alpha must lie in (0, 1) and xi be positive".into()));
    }
    let ar_prior = file.ar_prior.unwrap_or_default();
    ar_prior.validate()?;
    Ok(Plan {
        data,
        out_dir,
        method,
        order,
        seed: args.seed.or(file.seed).unwrap_or(0),
        center: args.center || file.center.unwrap_or(false),
        difference: args.difference || file.difference.unwrap_or(false),
        write_samples: args.write_samples || file.write_samples.unwrap_or(false),
        p_max: args.p_max.or(file.p_max).unwrap_or(15),
        alpha,
        xi,
        mcmc,
        scan: file.scan,
        prior,
        ar_prior,
    })
}

#[derive(Serialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
}

fn summarize(values: Vec<f64>) -> Option<ParamSummary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut s = values;
    s.sort_by(f64::total_cmp);
    Some(ParamSummary {
        mean,
        sd: var.sqrt(),
        q05: quantile_sorted(&s, 0.05),
        median: quantile_sorted(&s, 0.5),
        q95: quantile_sorted(&s, 0.95),
    })
}

#[derive(Serialize)]
struct AcceptanceRates {
    v: Option<f64>,
    w: Option<f64>,
    k: Option<f64>,
    tau: Option<f64>,
    eta: Option<f64>,
    rho: Vec<Option<f64>>,
}

fn rate(c: &AcceptanceCounts) -> Option<f64> {
    (c.proposed > 0).then(|| c.rate())
}

#[derive(Serialize)]
struct FitSummary<'a> {
    method: Method,
    order: usize,
    n: usize,
    preprocessing: Preprocessing,
    seed: u64,
    mcmc: &'a McmcConfig,
    prior: Option<&'a BernsteinDirichletConfig>,
    ar_prior: Option<&'a ArPriorConfig>,
    order_scan: Option<&'a OrderScan>,
    n_retained: usize,
    alpha: f64,
    xi: f64,
    eta: Option<ParamSummary>,
    k: Option<ParamSummary>,
    tau: Option<ParamSummary>,
    sigma2: Option<ParamSummary>,
    rho: Vec<ParamSummary>,
    acceptance: AcceptanceRates,
    frequencies: &'a [f64],
    median_psd: &'a [f64],
    uniform_band: &'a CredibleBand,
    pointwise_band: &'a CredibleBand,
}

fn traces_csv(chain: &ChainOutput) -> String {
    let mut out = String::from("iteration,retained,k,tau,eta,sigma2,log_lik");
    for l in 1..=chain.order {
        out.push_str(&format!(",rho_{l}"));
    }
    out.push('\n');
    for t in &chain.traces {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            t.iteration,
            t.retained,
            t.k.map(|k| k.to_string()).unwrap_or_default(),
            opt(t.tau),
            opt(t.eta),
            opt(t.sigma2),
            t.log_lik
        ));
        for r in &t.rho {
            out.push_str(&format!(",{r}"));
        }
        out.push('\n');
    }
    out
}

fn psd_csv(
    freqs: &[f64],
    pgram: &[f64],
    median: &[f64],
    uniform: &CredibleBand,
    pointwise: &CredibleBand,
) -> String {
    let mut out = String::from(
        "frequency,periodogram,median,uniform_lower,uniform_upper,pointwise_lower,pointwise_upper\n",
    );
    for j in 0..freqs.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            freqs[j],
            pgram[j],
            median[j],
            uniform.lower[j],
            uniform.upper[j],
            pointwise.lower[j],
            pointwise.upper[j]
        ));
    }
    out
}

fn samples_csv(chain: &ChainOutput) -> String {
    let m = chain.psd.grid.len();
    let header: Vec<String> = (0..m).map(|j| format!("lambda_{j}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in &chain.psd.samples {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn fit_chain(plan: &Plan, ts: &TimeSeries) -> CliResult<(ChainOutput, Option<OrderScan>)> {
    let needs_scan = plan.order == OrderSetting::Dic;
    let scan = if needs_scan {
        let mut cfg = plan.mcmc.apply(McmcConfig::ar_default(derive_seed(plan.seed, "order-scan", 0)));
        if let Some(r) = plan.scan {
            cfg.iterations = r.iterations;
            cfg.burn_in = r.burn_in;
            cfg.thin = r.thin;
        }
        Some(select_order_with_chains(ts, plan.p_max, &plan.ar_prior, &cfg)?)
    } else {
        None
    };
    let p = match (plan.order, &scan) {
        (OrderSetting::Fixed(p), _) => p,
        (OrderSetting::Dic, Some((s, _))) => s.selected_dic,
        (OrderSetting::Dic, None) => unreachable!(),
    };
    let chain = match plan.method {
        FitMethod::Ar => match scan {
            Some((s, mut chains)) => return Ok((chains.swap_remove(p), Some(s))),
            None => run_ar(ts, p, &plan.ar_prior, &plan.mcmc.apply(McmcConfig::ar_default(plan.seed)))?,
        },
        FitMethod::Np | FitMethod::Npc => {
            let prior = plan.prior.apply(BernsteinDirichletConfig::for_series_len(ts.len()));
            run_npc(ts, p, &prior, &plan.mcmc.apply(McmcConfig::npc_default(plan.seed)))?
        }
    };
    Ok((chain, scan.map(|(s, _)| s)))
}

pub fn run(args: Args) -> CliResult<()> {
    let plan = resolve(args)?;
    let ts = preprocess(read_series(&plan.data)?, plan.center, plan.difference)?;
    let start = Instant::now();
    let (chain, scan) = fit_chain(&plan, &ts)?;
    let elapsed = start.elapsed().as_secs_f64();

    let grid = &chain.psd.grid;
    let median = posterior_median_psd(&chain.psd)?;
    let uniform = uniform_credible_band_masked(&chain.psd, plan.alpha, plan.xi, &interior_mask(grid))?;
    let pointwise = pointwise_credible_band(&chain.psd, plan.alpha)?;
    let pgram = periodogram(&ts);
    let retained: Vec<_> = chain.retained().collect();
    let column = |f: &dyn Fn(&npc_core::mcmc::TraceRecord) -> Option<f64>| {
        summarize(retained.iter().filter_map(|t| f(t)).collect())
    };
    let prior = plan.prior.apply(BernsteinDirichletConfig::for_series_len(ts.len()));
    let is_ar = chain.method == Method::Ar;
    let acc = &chain.acceptance;
    let summary = FitSummary {
        method: chain.method,
        order: chain.order,
        n: ts.len(),
        preprocessing: ts.meta(),
        seed: plan.seed,
        mcmc: &chain.config,
        prior: (!is_ar).then_some(&prior),
        ar_prior: (is_ar || scan.is_some()).then_some(&plan.ar_prior),
        order_scan: scan.as_ref(),
        n_retained: retained.len(),
        alpha: plan.alpha,
        xi: plan.xi,
        eta: column(&|t| t.eta),
        k: column(&|t| t.k.map(|k| k as f64)),
        tau: column(&|t| t.tau),
        sigma2: column(&|t| t.sigma2),
        rho: (0..chain.order)
            .filter_map(|l| column(&|t| Some(t.rho[l])))
            .collect(),
        acceptance: AcceptanceRates {
            v: rate(&acc.v),
            w: rate(&acc.w),
            k: rate(&acc.k),
            tau: rate(&acc.tau),
            eta: rate(&acc.eta),
            rho: acc.rho.iter().map(rate).collect(),
        },
        frequencies: grid.freqs(),
        median_psd: &median,
        uniform_band: &uniform,
        pointwise_band: &pointwise,
    };

    let dir = &plan.out_dir;
    ensure_dir(dir)?;
    write_json(&dir.join("summary.json"), &summary)?;
    write_text(
        &dir.join("psd.csv"),
        &psd_csv(grid.freqs(), pgram.ordinates(), &median, &uniform, &pointwise),
    )?;
    write_text(&dir.join("traces.csv"), &traces_csv(&chain))?;
    if plan.write_samples {
        write_text(&dir.join("samples.csv"), &samples_csv(&chain))?;
    }
    if let Some(s) = &scan {
        write_scan(dir, s)?;
    }
    write_json(
        &dir.join("timing.json"),
        &serde_json::json!({ "wall_time_seconds": elapsed }),
    )?;
    eprintln!(
        "fitted {} (order {}) to {} observations in {elapsed:.1} s",
        chain.method.as_str(),
        chain.order,
        ts.len()
    );
    Ok(())
}
