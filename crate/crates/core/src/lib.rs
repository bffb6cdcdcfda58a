//! Bayesian spectral density estimation with a nonparametrically corrected
//! autoregressive likelihood.

pub mod armodels;
pub mod benchmark;
pub mod bernstein;
pub mod diagnostics;
pub mod error;
pub mod fourier;
pub mod likelihood;
pub mod mcmc;
pub mod modelselect;
pub mod postprocess;

pub use error::{Error, Result};

pub use armodels::{ArModel, ArmaSpec, PacfVector};
pub use benchmark::{BenchmarkReport, BenchmarkSpec, MethodSpec};
pub use bernstein::{BernsteinDirichletConfig, BernsteinState};
pub use fourier::{FrequencyGrid, Periodogram, TimeSeries};
pub use likelihood::{SpectralGridValues, SpectralRole};
pub use mcmc::{ArPriorConfig, ChainOutput, McmcConfig};
pub use modelselect::OrderScan;
pub use postprocess::{CredibleBand, PosteriorSpectra};
