//! Fixtures shared by the benchmarks.

use npc_core::armodels::{simulate_arma, ArmaSpec};
use npc_core::fourier::TimeSeries;

/// AR(1) series with coefficient 0.9, the usual benchmark input.
pub fn ar1_series(n: usize) -> TimeSeries {
    simulate_arma(&ArmaSpec::new(vec![0.9], vec![]).expect("causal"), n, 1).expect("valid length")
}

/// Series lengths covering power-of-two, smooth and prime sizes.
pub const LENGTHS: [usize; 4] = [128, 256, 257, 1024];
