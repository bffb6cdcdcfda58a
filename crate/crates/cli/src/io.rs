//! Reading and writing data files. Floats are written in shortest
//! round-trip decimal form and every file ends lines with `\n`.

use std::fs;
use std::path::Path;

use npc_core::fourier::TimeSeries;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Reads the `value` column (or the only column) of a CSV file with a
/// header row.
pub fn read_series(path: &Path) -> CliResult<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let headers = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    let col = match headers.iter().position(|h| h == "value") {
        Some(c) => c,
        None if headers.len() == 1 => 0,
        None => return Err(CliError::io(path, "no column named \"value\"")),
    };
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let field = rec.get(col).unwrap_or("");
        let v: f64 = field
            .parse()
            .map_err(|_| CliError::io(path, format!("row {}: cannot parse {field:?}", i + 1)))?;
        values.push(v);
    }
    TimeSeries::new(values).map_err(|e| CliError::io(path, e))
}

pub fn series_csv(values: &[f64]) -> String {
    let mut out = String::from("value\n");
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    out
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serializing {}: {e}", path.display())))?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Formats an optional float, empty when absent.
pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
