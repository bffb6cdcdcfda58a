pub mod benchmark;
pub mod fit;
pub mod order_scan;
pub mod plot;
pub mod simulate;

use npc_core::fourier::TimeSeries;

use crate::error::CliResult;

/// Differencing first, then mean-centering.
pub fn preprocess(ts: TimeSeries, center: bool, difference: bool) -> CliResult<TimeSeries> {
    let ts = if difference { ts.differenced()? } else { ts };
    Ok(if center { ts.centered() } else { ts })
}
