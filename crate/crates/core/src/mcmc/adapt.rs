//! Batch-wise adaptation of random-walk proposal scales.

use serde::{Deserialize, Serialize};

/// Step size for batch `b` (1-based): `min(step_max, b^{-1/2})`.
pub fn adapt_step(batch: usize, step_max: f64) -> f64 {
    step_max.min(1.0 / (batch as f64).sqrt())
}

/// Proposal scale of one coordinate. After each batch during burn-in the
/// log scale moves up if the batch acceptance rate exceeds the target and
/// down otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveScale {
    log_sd: f64,
    batches: usize,
    batch_proposed: usize,
    batch_accepted: usize,
}

impl AdaptiveScale {
    pub fn new(sd: f64) -> Self {
        Self {
            log_sd: sd.ln(),
            batches: 0,
            batch_proposed: 0,
            batch_accepted: 0,
        }
    }

    pub fn sd(&self) -> f64 {
        self.log_sd.exp()
    }

    pub fn batches(&self) -> usize {
        self.batches
    }

    pub fn record(&mut self, accepted: bool) {
        self.batch_proposed += 1;
        self.batch_accepted += accepted as usize;
    }

    /// Applies one adaptation with the given batch acceptance rate.
    pub fn adapt_proposal(&mut self, rate: f64, target: f64, step_max: f64) {
        self.batches += 1;
        let delta = adapt_step(self.batches, step_max);
        if rate > target {
            self.log_sd += delta;
        } else {
            self.log_sd -= delta;
        }
    }

    /// Closes the current batch, adapting from its acceptance rate.
    pub fn end_batch(&mut self, target: f64, step_max: f64) {
        let rate = if self.batch_proposed == 0 {
            0.0
        } else {
            self.batch_accepted as f64 / self.batch_proposed as f64
        };
        self.adapt_proposal(rate, target, step_max);
        self.batch_proposed = 0;
        self.batch_accepted = 0;
    }

    /// Whether iteration `it` (0-based) ends an adaptation batch.
    pub fn is_batch_end(it: usize, batch: usize, burn_in: usize) -> bool {
        it < burn_in && (it + 1) % batch == 0
    }
}
