use std::path::{Path, PathBuf};

use npc_core::mcmc::{ArPriorConfig, McmcConfig};
use npc_core::modelselect::{select_order, OrderScan};

use super::preprocess;
use crate::error::CliResult;
use crate::io::{ensure_dir, read_series, write_json, write_text};
use crate::svg::Chart;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 15)]
    p_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    center: bool,
    #[arg(long)]
    difference: bool,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Divide the default AR run lengths by this factor.
    #[arg(long)]
    scale_down: Option<usize>,
}

pub fn scan_svg(scan: &OrderScan) -> String {
    let pts: Vec<(f64, f64)> = scan
        .orders
        .iter()
        .zip(&scan.neg_loglik)
        .map(|(&p, &v)| (p as f64, v))
        .collect();
    let lo = scan.neg_loglik.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scan.neg_loglik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-9);
    let mut chart = Chart::new(
        (0.0, *scan.orders.last().unwrap_or(&0) as f64),
        (lo - pad, hi + pad),
        "Negative log-likelihood at the Yule-Walker fit",
        "order p",
        "negative log-likelihood",
    );
    chart.polyline(&pts, "black", 1.5, "neg-loglik");
    for &(x, y) in &pts {
        chart.marker(x, y, "black", "", "order-point");
    }
    let p = scan.selected_dic;
    chart.marker(
        p as f64,
        scan.neg_loglik[p],
        "firebrick",
        &format!("DIC minimum p = {p}"),
        "dic-min",
    );
    chart.render()
}

pub fn write_scan(dir: &Path, scan: &OrderScan) -> CliResult<()> {
    write_text(&dir.join("order_scan.csv"), &scan.to_csv())?;
    write_json(&dir.join("order_scan.json"), scan)?;
    write_text(&dir.join("order_scan.svg"), &scan_svg(scan))
}

pub fn run(args: Args) -> CliResult<()> {
    let ts = preprocess(read_series(&args.data)?, args.center, args.difference)?;
    let mut cfg = McmcConfig::ar_default(args.seed);
    if let Some(f) = args.scale_down.filter(|&f| f > 1) {
        cfg = cfg.scaled_down(f);
    }
    if let Some(v) = args.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = args.burn_in {
        cfg.burn_in = v;
    }
    let scan = select_order(&ts, args.p_max, &ArPriorConfig::default(), &cfg)?;
    ensure_dir(&args.out_dir)?;
    write_scan(&args.out_dir, &scan)?;
    eprintln!("DIC-selected order: {}", scan.selected_dic);
    Ok(())
}
