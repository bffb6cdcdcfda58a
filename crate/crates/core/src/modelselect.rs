//! Choice of the working AR order: DIC over Bayesian AR fits and the curve
//! of Yule–Walker plug-in negative log-likelihoods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::armodels::{ar_log_likelihood, yule_walker_fit, ArModel, PacfVector};
use crate::error::{Error, Result};
use crate::fourier::TimeSeries;
use crate::mcmc::{run_ar, ArPriorConfig, ChainOutput, McmcConfig, Method};

/// `-ar_log_likelihood` at the Yule–Walker fit, for orders `0..=p_max`.
pub fn neg_loglik_curve(ts: &TimeSeries, p_max: usize) -> Result<Vec<f64>> {
    if p_max >= ts.len() {
        return Err(Error::invalid(format!(
            "p_max ({p_max}) must be smaller than the series length ({})",
            ts.len()
        )));
    }
    (0..=p_max)
        .map(|p| {
            let fit = yule_walker_fit(ts, p)?;
            Ok(-ar_log_likelihood(ts, &fit)?)
        })
        .collect()
}

/// Deviance summaries of an AR chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DicComponents {
    /// Posterior mean deviance.
    pub d_bar: f64,
    /// Deviance at the posterior means of `rho` and `sigma2`.
    pub d_hat: f64,
    pub p_d: f64,
    pub dic: f64,
}

fn deviance(ts: &TimeSeries, rho: &[f64], sigma2: f64) -> Result<f64> {
    let model = ArModel::from_pacf(PacfVector::new(rho.to_vec())?, sigma2)?;
    Ok(-2.0 * ar_log_likelihood(ts, &model)?)
}

/// `DIC = D_bar + p_D` with `p_D = D_bar - D(theta_bar)`, where the deviance
/// is `-2` times the exact AR log-likelihood and `theta_bar` collects the
/// posterior means of the partial autocorrelations and of `sigma2`.
pub fn dic_components(chain: &ChainOutput, ts: &TimeSeries) -> Result<DicComponents> {
    if chain.method != Method::Ar {
        return Err(Error::invalid("DIC needs a chain from the AR sampler"));
    }
    let draws: Vec<_> = chain.retained().collect();
    if draws.is_empty() {
        return Err(Error::invalid("chain has no retained draws"));
    }
    let mut d_sum = 0.0;
    let mut rho_sum = vec![0.0; chain.order];
    let mut s2_sum = 0.0;
    for t in &draws {
        let s2 = t
            .sigma2
            .ok_or_else(|| Error::invalid("AR trace lacks sigma2"))?;
        d_sum += deviance(ts, &t.rho, s2)?;
        for (acc, r) in rho_sum.iter_mut().zip(&t.rho) {
            *acc += r;
        }
        s2_sum += s2;
    }
    let m = draws.len() as f64;
    let d_bar = d_sum / m;
    let rho_bar: Vec<f64> = rho_sum.iter().map(|r| r / m).collect();
    let d_hat = deviance(ts, &rho_bar, s2_sum / m)?;
    let p_d = d_bar - d_hat;
    Ok(DicComponents {
        d_bar,
        d_hat,
        p_d,
        dic: d_bar + p_d,
    })
}

pub fn dic(chain: &ChainOutput, ts: &TimeSeries) -> Result<f64> {
    Ok(dic_components(chain, ts)?.dic)
}

/// Consecutive drops of the negative log-likelihood curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElbowPoint {
    pub order: usize,
    /// `nll(order - 1) - nll(order)`.
    pub drop: f64,
    /// `drop(order) / drop(order + 1)`; `None` at the last order.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderScan {
    pub orders: Vec<usize>,
    pub neg_loglik: Vec<f64>,
    pub dic: Vec<f64>,
    /// 1 for the smallest DIC.
    pub dic_rank: Vec<usize>,
    pub bic: Vec<f64>,
    pub selected_dic: usize,
    pub elbow_candidates: Vec<ElbowPoint>,
}

pub fn elbow_points(neg_loglik: &[f64]) -> Vec<ElbowPoint> {
    let drops: Vec<f64> = neg_loglik.windows(2).map(|w| w[0] - w[1]).collect();
    drops
        .iter()
        .enumerate()
        .map(|(i, &d)| ElbowPoint {
            order: i + 1,
            drop: d,
            ratio: drops.get(i + 1).map(|next| d / next),
        })
        .collect()
}

fn ranks(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut r = vec![0; values.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank + 1;
    }
    r
}

/// Fits AR(p) for `p = 0..=p_max` with the Bayesian AR sampler and returns
/// the DIC of each fit together with the plug-in curve and BIC
/// (`-2 loglik + p ln n` at the Yule–Walker fit). The chain for order `p`
/// uses stream `p` of `cfg.seed`. Orders are fitted in parallel.
pub fn select_order(
    ts: &TimeSeries,
    p_max: usize,
    prior: &ArPriorConfig,
    cfg: &McmcConfig,
) -> Result<OrderScan> {
    Ok(select_order_with_chains(ts, p_max, prior, cfg)?.0)
}

/// [`select_order`] that also returns the fitted chains, indexed by order.
pub fn select_order_with_chains(
    ts: &TimeSeries,
    p_max: usize,
    prior: &ArPriorConfig,
    cfg: &McmcConfig,
) -> Result<(OrderScan, Vec<ChainOutput>)> {
    let neg_loglik = neg_loglik_curve(ts, p_max)?;
    let fits: Vec<(f64, ChainOutput)> = (0..=p_max)
        .into_par_iter()
        .map(|p| {
            let chain_cfg = cfg.with_seed(cfg.seed, p as u64);
            let chain = run_ar(ts, p, prior, &chain_cfg)?;
            Ok((dic(&chain, ts)?, chain))
        })
        .collect::<Result<_>>()?;
    let (dic, chains): (Vec<f64>, Vec<ChainOutput>) = fits.into_iter().unzip();
    let n = ts.len() as f64;
    let bic = neg_loglik
        .iter()
        .enumerate()
        .map(|(p, nll)| 2.0 * nll + p as f64 * n.ln())
        .collect();
    let dic_rank = ranks(&dic);
    let selected_dic = dic_rank.iter().position(|&r| r == 1).unwrap_or(0);
    let scan = OrderScan {
        orders: (0..=p_max).collect(),
        elbow_candidates: elbow_points(&neg_loglik),
        neg_loglik,
        dic,
        dic_rank,
        bic,
        selected_dic,
    };
    Ok((scan, chains))
}

impl OrderScan {
    /// CSV with header `order,neg_loglik,dic,dic_rank,bic`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,neg_loglik,dic,dic_rank,bic\n");
        for i in 0..self.orders.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.orders[i], self.neg_loglik[i], self.dic[i], self.dic_rank[i], self.bic[i]
            ));
        }
        out
    }
}
