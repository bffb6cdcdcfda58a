use std::f64::consts::PI;
use std::path::PathBuf;

use crate::error::{CliError, CliResult};
use crate::io::write_text;
use crate::svg::Chart;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BandArg {
    Uniform,
    Pointwise,
    None,
}

#[derive(clap::Args)]
pub struct Args {
    /// Output directory of `fit` (reads psd.csv).
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Label the frequency axis in Hz for this sampling rate.
    #[arg(long)]
    sample_rate: Option<f64>,
    #[arg(long, value_enum, default_value_t = BandArg::Uniform)]
    band: BandArg,
    #[arg(long, default_value = "Posterior median log spectral density")]
    title: String,
}

struct PsdTable {
    freq: Vec<f64>,
    pgram: Vec<f64>,
    median: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn read_psd(path: &std::path::Path, band: BandArg) -> CliResult<PsdTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let headers = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::io(path, format!("missing column {name}")))
    };
    let (lo_name, hi_name) = match band {
        BandArg::Pointwise => ("pointwise_lower", "pointwise_upper"),
        _ => ("uniform_lower", "uniform_upper"),
    };
    let idx = [col("frequency")?, col("periodogram")?, col("median")?, col(lo_name)?, col(hi_name)?];
    let mut cols: [Vec<f64>; 5] = Default::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        for (c, &i) in cols.iter_mut().zip(&idx) {
            let v = rec
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::io(path, "malformed number"))?;
            c.push(v);
        }
    }
    let [freq, pgram, median, lower, upper] = cols;
    if freq.is_empty() {
        return Err(CliError::io(path, "no rows"));
    }
    Ok(PsdTable { freq, pgram, median, lower, upper })
}

pub fn run(args: Args) -> CliResult<()> {
    let t = read_psd(&args.fit.join("psd.csv"), args.band)?;
    let (scale, x_label) = match args.sample_rate {
        Some(fs) if fs > 0.0 => (fs / (2.0 * PI), "frequency (Hz)"),
        Some(_) => return Err(CliError::Config("sample rate must be positive".into())),
        None => (1.0, "frequency (radians)"),
    };
    let x: Vec<f64> = t.freq.iter().map(|f| f * scale).collect();
    let log_pts = |v: &[f64]| -> Vec<(f64, f64)> {
        x.iter()
            .zip(v)
            .filter(|(_, &y)| y > 0.0)
            .map(|(&x, &y)| (x, y.ln()))
            .collect()
    };
    let pg = log_pts(&t.pgram);
    let med = log_pts(&t.median);
    let show_band = args.band != BandArg::None;
    let mut ys: Vec<f64> = pg.iter().chain(&med).map(|p| p.1).collect();
    if show_band {
        ys.extend(log_pts(&t.upper).iter().map(|p| p.1));
        ys.extend(log_pts(&t.lower).iter().map(|p| p.1));
    }
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(CliError::Numeric("nothing positive to plot on a log scale".into()));
    }
    let pad = 0.05 * (hi - lo).max(1e-9);
    let mut chart = Chart::new(
        (x[0], x[x.len() - 1]),
        (lo - pad, hi + pad),
        &args.title,
        x_label,
        "log spectral density",
    );
    if show_band {
        let floor = lo - pad;
        let log_or_floor = |v: f64| if v > 0.0 { v.ln() } else { floor };
        let mut poly: Vec<(f64, f64)> = x.iter().zip(&t.upper).map(|(&x, &u)| (x, log_or_floor(u))).collect();
        poly.extend(x.iter().zip(&t.lower).rev().map(|(&x, &l)| (x, log_or_floor(l))));
        chart.polygon(&poly, "steelblue", 0.3, "band");
    }
    chart.polyline(&pg, "grey", 1.0, "log-periodogram");
    chart.polyline(&med, "black", 2.0, "median");
    write_text(&args.out, &chart.render())
}
