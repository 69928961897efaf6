//! Rare-event probabilities `P(S_n ∈ I_n)` with
//! `I_n = [n (rho_1(n) + mu), n (rho_2(n) + mu)]`, their asymptotic
//! prediction, and the jump structure of the conditioned sums.

mod exact;
mod profiles;
mod structured;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimate::EstimateResult;
use crate::krho::KrhoResult;
use crate::rng::{batched, DEFAULT_BATCH};
use crate::scheme::{sample_sum, Level, SchemeSpec};
use crate::stats::ln_binomial;

pub use exact::{convolution_power, exact_distribution, exact_dp, exact_interval};
pub use profiles::{
    conditional_profiles, corollary1_fraction, corollary2_gof, fraction_with_at_least, profiles_from_limit, write_profiles_jsonl, GofOptions,
    GofResult, JumpProfile, LimitSampler, ProfileRun,
};
pub use structured::{estimate_structured, tk_window_prob, StructuredEstimate};
pub use sweep::{ratio_sweep, write_sweep_csv, Centering, SweepOptions, SweepRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WidthRule {
    /// `rho_2 - rho_1 = width` for every `n`.
    Fixed { width: f64 },
    /// `rho_2 - rho_1 = w0 n^-gamma`.
    Power { w0: f64, gamma: f64 },
    /// `[rho_1, rho_2]` given outright, independent of `n`.
    Between { rho1: f64, rho2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoWindow {
    pub rho: f64,
    pub k: usize,
    pub width_rule: WidthRule,
    /// Centered windows are `rho ± width/2`; otherwise `[rho, rho + width]`.
    pub centered: bool,
}

impl RhoWindow {
    pub fn new(rho: f64, width_rule: WidthRule, centered: bool) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) || rho.fract() == 0.0 {
            return Err(invalid(format!("rho must be positive and non-integer, got {rho}")));
        }
        match width_rule {
            WidthRule::Fixed { width } if !(width > 0.0) => {
                return Err(invalid(format!("window width must be positive, got {width}")))
            }
            WidthRule::Power { w0, gamma } if !(w0 > 0.0) || !(gamma > 0.0) => {
                return Err(invalid(format!("power rule needs w0 > 0 and gamma > 0, got ({w0}, {gamma})")))
            }
            WidthRule::Between { rho1, rho2 } if !(rho2 > rho1) => {
                return Err(invalid(format!("empty window: rho1 = {rho1} >= rho2 = {rho2}")))
            }
            _ => {}
        }
        Ok(Self { rho, k: rho.ceil() as usize, width_rule, centered })
    }

    pub fn fixed(rho: f64, width: f64) -> Result<Self> {
        Self::new(rho, WidthRule::Fixed { width }, true)
    }

    /// Shrinking window; `gamma` must stay below `min(1, alpha - 1)`.
    pub fn power(rho: f64, w0: f64, gamma: f64, alpha: f64) -> Result<Self> {
        let cap = 1f64.min(alpha - 1.0);
        if !(gamma < cap) {
            return Err(invalid(format!("gamma = {gamma} must be below min(1, alpha - 1) = {cap}")));
        }
        Self::new(rho, WidthRule::Power { w0, gamma }, true)
    }

    /// `power(1, min(1, alpha - 1) / 2)`.
    pub fn default_power(rho: f64, alpha: f64) -> Result<Self> {
        Self::power(rho, 1.0, 0.5 * 1f64.min(alpha - 1.0), alpha)
    }

    pub fn between(rho1: f64, rho2: f64) -> Result<Self> {
        let mid = 0.5 * (rho1 + rho2);
        let rho = if mid.fract() == 0.0 { mid + 1e-9 } else { mid };
        Self::new(rho.max(1e-9), WidthRule::Between { rho1, rho2 }, true)
    }

    pub fn width(&self, n: u64) -> f64 {
        let (a, b) = self.bounds(n);
        b - a
    }

    /// `(rho_1(n), rho_2(n))`.
    pub fn bounds(&self, n: u64) -> (f64, f64) {
        let w = match self.width_rule {
            WidthRule::Fixed { width } => width,
            WidthRule::Power { w0, gamma } => w0 * (n as f64).powf(-gamma),
            WidthRule::Between { rho1, rho2 } => return (rho1, rho2),
        };
        if self.centered {
            (self.rho - 0.5 * w, self.rho + 0.5 * w)
        } else {
            (self.rho, self.rho + w)
        }
    }

    /// `I_n` on the scale of `S_n`.
    pub fn interval(&self, n: u64, mu_ref: f64) -> (f64, f64) {
        let (a, b) = self.bounds(n);
        let nf = n as f64;
        (nf * (a + mu_ref), nf * (b + mu_ref))
    }

    /// Whether `[rho_1(n), rho_2(n)]` stays inside `(k - 1, k)`.
    pub fn inside_slab(&self, n: u64) -> bool {
        let (a, b) = self.bounds(n);
        a > (self.k - 1) as f64 && b < self.k as f64
    }
}

/// `0.5 (rho - k + 1) / (k + 2 / (alpha - 1))`.
pub fn default_eps(rho: f64, alpha: f64) -> f64 {
    let k = rho.ceil();
    0.5 * (rho - (k - 1.0)) / (k + 2.0 / (alpha - 1.0))
}

/// `C(n, k) (rho_2 - rho_1) n^(-alpha k) K_rho`, evaluated in log space.
pub fn theorem1_rhs(n: u64, width: f64, k: usize, alpha: f64, krho: &KrhoResult) -> Result<f64> {
    let value = krho.finite_value()?;
    if (k as u64) > n {
        return Ok(0.0);
    }
    if width <= 0.0 || value <= 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    Ok((ln_binomial(n, k as u64) + width.ln() - alpha * k as f64 * nf.ln() + value.ln()).exp())
}

/// [`theorem1_rhs`] with width, `k` and `alpha` read from the window and scheme.
pub fn theorem1_rhs_for(spec: &SchemeSpec, n: u64, window: &RhoWindow, krho: &KrhoResult) -> Result<f64> {
    theorem1_rhs(n, window.width(n), window.k, spec.alpha()?, krho)
}

/// Hit-counting estimate of `P(S_n ∈ I_n)`.
pub fn estimate_naive(level: &Level, window: &RhoWindow, mu_ref: f64, samples: u64, seed: u64) -> Result<EstimateResult> {
    let (lo, hi) = window.interval(level.n, mu_ref);
    estimate_interval(level, lo, hi, samples, seed)
}

/// Hit-counting estimate of `P(lo <= S_n <= hi)`.
pub fn estimate_interval(level: &Level, lo: f64, hi: f64, samples: u64, seed: u64) -> Result<EstimateResult> {
    if samples < 10_000 {
        return Err(invalid(format!("naive estimation needs at least 10^4 samples, got {samples}")));
    }
    let hits: u64 = batched(seed, samples, DEFAULT_BATCH, |rng, count, _| {
        (0..count)
            .filter(|_| {
                let s = sample_sum(level, rng, false).0;
                s >= lo && s <= hi
            })
            .count() as u64
    })
    .iter()
    .sum();
    if hits < 25 {
        log::warn!("only {hits} hits in {samples} samples; the naive estimate is unreliable");
    }
    Ok(EstimateResult::from_hits(hits, samples, "naive"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krho::{krho_eval, KrhoMethod};
    use crate::density::ShapeDensity;

    #[test]
    fn window_construction() {
        assert!(RhoWindow::fixed(1.0, 0.1).is_err());
        assert!(RhoWindow::fixed(0.5, 0.0).is_err());
        assert!(RhoWindow::between(0.6, 0.4).is_err());
        assert!(RhoWindow::power(0.5, 1.0, 0.6, 1.5).is_err());
        let w = RhoWindow::fixed(1.5, 0.2).unwrap();
        assert_eq!(w.k, 2);
        let (a, b) = w.bounds(100);
        assert!((a - 1.4).abs() < 1e-15 && (b - 1.6).abs() < 1e-15);
        let (lo, hi) = w.interval(100, 3.0);
        assert!((lo - 440.0).abs() < 1e-9 && (hi - 460.0).abs() < 1e-9);
        let p = RhoWindow::default_power(0.5, 1.5).unwrap();
        assert!((p.width(256) - 0.25).abs() < 1e-15);
        let up = RhoWindow::new(0.5, WidthRule::Fixed { width: 0.1 }, false).unwrap();
        assert_eq!(up.bounds(7), (0.5, 0.6));
    }

    #[test]
    fn default_eps_rule() {
        assert!((default_eps(0.5, 1.5) - 0.05).abs() < 1e-15);
        assert!((default_eps(1.5, 1.2) - 0.5 * 0.5 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn rhs_examples() {
        let k = KrhoResult { value: 0.5, abs_error_bound: 0.0, method: KrhoMethod::Grid, diverged: false, note: None };
        let r = theorem1_rhs(100, 0.1, 2, 1.5, &k).unwrap();
        assert!((r - 2.475e-4).abs() < 1e-15);
        let h = crate::density::ParetoShape { c: 1.5, alpha: 1.5 };
        let k1 = krho_eval(&h, 0.5, 1, 1e-9).unwrap();
        let r1 = theorem1_rhs(1000, 0.1, 1, 1.5, &k1).unwrap();
        assert!((r1 / (1000.0 * 0.1 * 1000f64.powf(-1.5) * h.eval(0.5)) - 1.0).abs() < 1e-12);
        assert_eq!(theorem1_rhs(1000, 0.0, 1, 1.5, &k1).unwrap(), 0.0);
        let big = KrhoResult { value: 3.0, ..k.clone() };
        let tiny = theorem1_rhs(1_000_000, 0.1, 5, 3.0, &big).unwrap();
        assert!(tiny > 0.0 && tiny.is_finite());
        let bad = KrhoResult { diverged: true, value: f64::INFINITY, ..k };
        assert!(theorem1_rhs(10, 0.1, 2, 1.5, &bad).is_err());
    }

    #[test]
    fn full_support_window() {
        let lv = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().level(16).unwrap();
        let r = estimate_interval(&lv, 0.0, 256.0, 20_000, 1).unwrap();
        assert_eq!(r.prob, 1.0);
        assert!(estimate_interval(&lv, 0.0, 256.0, 100, 1).is_err());
    }
}
