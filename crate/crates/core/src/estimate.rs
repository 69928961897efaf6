//! Probability estimates shared by the sampling and rare-event code.

use serde::{Deserialize, Serialize};

use crate::stats::binomial_se;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub prob: f64,
    pub std_error: f64,
    pub samples: u64,
    pub hits: u64,
    pub method: String,
}

impl EstimateResult {
    /// Hit-counting estimate with binomial standard error.
    pub fn from_hits(hits: u64, samples: u64, method: &str) -> Self {
        let prob = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
        Self { prob, std_error: binomial_se(prob, samples), samples, hits, method: method.to_string() }
    }

    /// Exact value, zero standard error.
    pub fn exact(prob: f64, method: &str) -> Self {
        Self { prob, std_error: 0.0, samples: 0, hits: 0, method: method.to_string() }
    }

    /// Number of standard errors separating `self` from `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.prob - value).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}
