//! Triangular schemes of cut-off heavy-tailed variables `W^(n)` in `[0, n]`.

mod config;
mod level;
mod ops;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{Density, LatticeShape, ParetoShape, SmoothShape};
use crate::error::{invalid, Error, Result};

pub use config::{load_config, parse_config};
pub use level::{GridLevel, Level};
pub use ops::{
    h_eval, lln_deviation, mean_mu_n, sample_sum, sample_w, sidecar_path, tail_check, BatchKind, MeanEstimate, SampleBatch,
    TailCheck,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// `W` exact Pareto with density `c x^(-alpha-1)` on `[x0, inf)`, `W^(n) = W ∧ n`.
    TruncatedPareto { c: f64, alpha: f64 },
    /// `P(W > x) = c x^-alpha` and `W^(n) = n (1 - exp(-W/n))`.
    SmoothCutoff { c: f64, alpha: f64 },
    /// Out-degree of a vertex of the lattice torus with `n = (2N+1)^d`.
    LatticeBall { d: u32, beta: f64 },
    /// Values `i n / m` for `i = 0..=m` with probabilities `pmf[i]`.
    DiscreteGrid {
        pmf: Vec<f64>,
        /// Tail index used only when a caller needs one (e.g. window rules).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    #[serde(flatten)]
    pub shape: Shape,
    /// Asymptotic mean; `None` when only finite-`n` means are known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_limit: Option<f64>,
}

impl SchemeSpec {
    pub fn new(shape: Shape) -> Result<Self> {
        let spec = Self { shape, mu_limit: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn truncated_pareto(c: f64, alpha: f64) -> Result<Self> {
        Self::new(Shape::TruncatedPareto { c, alpha })
    }

    pub fn smooth_cutoff(c: f64, alpha: f64) -> Result<Self> {
        Self::new(Shape::SmoothCutoff { c, alpha })
    }

    pub fn lattice_ball(d: u32, beta: f64) -> Result<Self> {
        Self::new(Shape::LatticeBall { d, beta })
    }

    pub fn discrete_grid(pmf: Vec<f64>) -> Result<Self> {
        Self::new(Shape::DiscreteGrid { pmf, alpha: None })
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu_limit = Some(mu);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::TruncatedPareto { c, alpha } | Shape::SmoothCutoff { c, alpha } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(invalid(format!("c must be positive, got {c}")));
                }
                if !(*alpha > 1.0 && alpha.is_finite()) {
                    return Err(invalid(format!("alpha must exceed 1, got {alpha}")));
                }
            }
            Shape::LatticeBall { d, beta } => {
                if *d == 0 {
                    return Err(invalid("d must be >= 1"));
                }
                if !(*beta > *d as f64 && beta.is_finite()) {
                    return Err(invalid(format!("beta must exceed d (beta={beta}, d={d})")));
                }
            }
            Shape::DiscreteGrid { pmf, alpha } => {
                if pmf.len() < 2 {
                    return Err(invalid("pmf needs at least two grid points"));
                }
                if pmf.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return Err(invalid("pmf entries must be finite and nonnegative"));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(invalid(format!("pmf sums to {total}, not 1")));
                }
                if let Some(a) = alpha {
                    if !(*a > 1.0) {
                        return Err(invalid(format!("alpha must exceed 1, got {a}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Tail index. Grids only have one if it was given explicitly.
    pub fn alpha(&self) -> Result<f64> {
        match &self.shape {
            Shape::TruncatedPareto { alpha, .. } | Shape::SmoothCutoff { alpha, .. } => Ok(*alpha),
            Shape::LatticeBall { d, beta } => Ok(beta / *d as f64),
            Shape::DiscreteGrid { alpha: Some(a), .. } => Ok(*a),
            Shape::DiscreteGrid { alpha: None, .. } => {
                Err(Error::Unsupported("discrete grid has no tail index unless alpha is set".into()))
            }
        }
    }

    /// The shape density `h`; not defined for grids.
    pub fn density(&self) -> Result<Density> {
        Ok(match &self.shape {
            Shape::TruncatedPareto { c, alpha } => Arc::new(ParetoShape { c: *c, alpha: *alpha }),
            Shape::SmoothCutoff { c, alpha } => Arc::new(SmoothShape { c: *c, alpha: *alpha }),
            Shape::LatticeBall { d, beta } => Arc::new(LatticeShape { d: *d, beta: *beta }),
            Shape::DiscreteGrid { .. } => {
                return Err(Error::Unsupported("discrete grid has no shape density h".into()))
            }
        })
    }

    /// `lim E W^(n)` when known in closed form or set by the user.
    pub fn mu(&self) -> Option<f64> {
        if self.mu_limit.is_some() {
            return self.mu_limit;
        }
        match &self.shape {
            Shape::TruncatedPareto { c, alpha } => {
                let x0 = (c / alpha).powf(1.0 / alpha);
                Some(x0 * alpha / (alpha - 1.0))
            }
            Shape::SmoothCutoff { c, alpha } => Some(c.powf(1.0 / alpha) * alpha / (alpha - 1.0)),
            _ => None,
        }
    }

    pub fn level(&self, n: u64) -> Result<Level> {
        Level::new(self, n)
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.shape, Shape::DiscreteGrid { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SchemeSpec::truncated_pareto(1.5, 1.0).is_err());
        assert!(SchemeSpec::truncated_pareto(-1.0, 1.5).is_err());
        assert!(SchemeSpec::lattice_ball(2, 2.0).is_err());
        assert!(SchemeSpec::discrete_grid(vec![0.5, 0.4]).is_err());
        assert!(SchemeSpec::discrete_grid(vec![1.0]).is_err());
        assert!(SchemeSpec::discrete_grid(vec![0.5, 0.25, 0.25]).is_ok());
    }

    #[test]
    fn limits_and_alpha() {
        let p = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap();
        assert!((p.mu().unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(SchemeSpec::lattice_ball(2, 3.0).unwrap().alpha().unwrap(), 1.5);
        assert!(matches!(
            SchemeSpec::discrete_grid(vec![0.5, 0.5]).unwrap().alpha(),
            Err(Error::Unsupported(_))
        ));
        assert!(SchemeSpec::discrete_grid(vec![0.5, 0.5]).unwrap().density().is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = SchemeSpec::smooth_cutoff(1.0, 1.4).unwrap().with_mu(2.0);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"shape\":\"smooth_cutoff\""));
        assert_eq!(serde_json::from_str::<SchemeSpec>(&text).unwrap(), s);
    }
}
