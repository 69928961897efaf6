//! Estimators that condition on which coordinates are big.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RhoWindow;
use crate::error::{invalid, Result};
use crate::estimate::EstimateResult;
use crate::krho::KrhoResult;
use crate::rng::{batched, DEFAULT_BATCH};
use crate::scheme::Level;
use crate::stats::{binomial_se, ln_binomial};

/// Sums draws; grid values are summed on the integer index.
struct Acc {
    step: Option<f64>,
    total: f64,
}

impl Acc {
    fn new(level: &Level) -> Self {
        Self { step: level.grid().map(|g| g.step), total: 0.0 }
    }
    #[inline]
    fn add(&mut self, v: f64) {
        match self.step {
            Some(step) => self.total += (v / step).round(),
            None => self.total += v,
        }
    }
    fn value(&self) -> f64 {
        self.step.map_or(self.total, |s| self.total * s)
    }
}

/// `P(n sigma1 <= T_k <= n sigma2)` for `T_k` a sum of `k` draws of `W^(n)`.
///
/// Each coordinate is drawn conditioned on `W >= n (sigma1 - k + 1)`, which
/// every coordinate of a hit must satisfy, and the estimate is reweighted by
/// the exact `P(W >= n (sigma1 - k + 1))^k`. Nothing is lost to the remainder.
pub fn tk_window_prob(level: &Level, k: usize, sigma1: f64, sigma2: f64, samples: u64, seed: u64) -> Result<EstimateResult> {
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }
    if !(sigma2 > sigma1) {
        return Err(invalid(format!("empty window [{sigma1}, {sigma2}]")));
    }
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    if !(sigma1 > (k - 1) as f64 && sigma2 < k as f64) {
        log::warn!("sigma window [{sigma1}, {sigma2}] is not inside ({}, {k})", k - 1);
    }
    let nf = level.n as f64;
    let (lo, hi) = (nf * sigma1, nf * sigma2);
    let floor = nf * (sigma1 - (k - 1) as f64);
    let conditioned = floor > 0.0;
    let p = if conditioned { level.survival_ge(floor) } else { 1.0 };
    if conditioned && p == 0.0 {
        return Ok(EstimateResult { prob: 0.0, std_error: 0.0, samples, hits: 0, method: "conditioned".into() });
    }
    if !conditioned {
        log::warn!("sigma1 <= k - 1: plain Monte Carlo for the k-fold sum");
    }
    let hits: u64 = batched(seed, samples, DEFAULT_BATCH, |rng, count, _| {
        let mut hits = 0u64;
        for _ in 0..count {
            let mut acc = Acc::new(level);
            for _ in 0..k {
                let w = if conditioned { level.sample_at_least(floor, rng).expect("p > 0") } else { level.sample(rng) };
                acc.add(w);
            }
            let t = acc.value();
            hits += (t >= lo && t <= hi) as u64;
        }
        hits
    })
    .iter()
    .sum();
    let q = hits as f64 / samples as f64;
    let weight = p.powi(k as i32);
    Ok(EstimateResult {
        prob: weight * q,
        std_error: weight * binomial_se(q, samples),
        samples,
        hits,
        method: if conditioned { "conditioned" } else { "naive" }.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    /// Number of coordinates above `eps n`.
    pub big: usize,
    /// `P(exactly big coordinates exceed eps n)`.
    pub weight: f64,
    pub samples: u64,
    pub hits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredEstimate {
    /// `P(S_n ∈ I_n)` summed over all strata.
    pub estimate: EstimateResult,
    /// The `big = k` stratum alone: exactly `k` jumps above `eps n`.
    pub dominant: EstimateResult,
    pub strata: Vec<Stratum>,
    /// Binomial mass of the strata that were not sampled.
    pub unsampled_weight: f64,
    /// In the dominant stratum, the fraction of replicas whose bulk stays
    /// within `slack n` of `(n - k) mu_ref`.
    pub bulk_factor: Option<f64>,
    pub rhs: Option<f64>,
}

/// Stratified estimate of `P(S_n ∈ I_n)` over the number `J` of coordinates
/// exceeding `eps n`:
/// `P(S_n ∈ I_n) = Σ_j C(n, j) p^j (1 - p)^(n - j) P(S_n ∈ I_n | first j big, rest small)`
/// with `p = P(W^(n) > eps n)`. Half the samples go to `j = k`; the rest are
/// spread over the other strata in proportion to their binomial weight.
#[allow(clippy::too_many_arguments)]
pub fn estimate_structured(
    level: &Level,
    window: &RhoWindow,
    mu_ref: f64,
    eps: f64,
    samples: u64,
    seed: u64,
    slack: Option<f64>,
    krho: Option<&KrhoResult>,
) -> Result<StructuredEstimate> {
    let k = window.k;
    let cap = (window.rho - (k - 1) as f64) / k as f64;
    if !(eps > 0.0 && eps < cap) {
        return Err(invalid(format!("eps = {eps} must lie in (0, {cap})")));
    }
    if samples < 100 {
        return Err(invalid("structured estimation needs at least 100 samples"));
    }
    let rhs = match krho {
        Some(kr) => {
            let alpha = level_alpha(level, kr)?;
            Some(super::theorem1_rhs(level.n, window.width(level.n), k, alpha, kr)?)
        }
        None => None,
    };
    let n = level.n;
    let nf = n as f64;
    let threshold = eps * nf;
    let p = level.survival(threshold);
    let (lo, hi) = window.interval(n, mu_ref);

    let ln_w = |j: u64| -> f64 {
        if p == 0.0 {
            return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        if p == 1.0 {
            return if j == n { 0.0 } else { f64::NEG_INFINITY };
        }
        ln_binomial(n, j) + j as f64 * p.ln() + (n - j) as f64 * (-p).ln_1p()
    };
    let weights: Vec<f64> = (0..=n).map(|j| ln_w(j).exp()).collect();

    let half = samples / 2;
    let rest = samples - half;
    let others: f64 = weights.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, w)| w).sum();
    let mut plan: Vec<(usize, u64)> = Vec::new();
    if (k as u64) <= n && weights[k] > 0.0 {
        plan.push((k, half));
    }
    for (j, &w) in weights.iter().enumerate() {
        if j == k || w == 0.0 || others == 0.0 {
            continue;
        }
        let alloc = (rest as f64 * w / others).round() as u64;
        if alloc >= 10 {
            plan.push((j, alloc));
        }
    }
    plan.sort_unstable();

    let slack_n = slack.map(|s| s * nf);
    let mut strata = Vec::new();
    let (mut prob, mut var) = (0.0, 0.0);
    let mut dominant = EstimateResult { prob: 0.0, std_error: 0.0, samples: 0, hits: 0, method: "structured".into() };
    let mut bulk_factor = None;
    let mut sampled_weight = 0.0;
    for (j, count) in plan {
        let stratum_seed = seed ^ (j as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let parts = batched(stratum_seed, count, DEFAULT_BATCH, |rng, batch, _| {
            let (mut hits, mut bulk_ok) = (0u64, 0u64);
            for _ in 0..batch {
                let (s, bulk) = stratum_draw(level, j, threshold, rng);
                hits += (s >= lo && s <= hi) as u64;
                if let Some(sl) = slack_n {
                    bulk_ok += ((bulk - (nf - j as f64) * mu_ref).abs() <= sl) as u64;
                }
            }
            (hits, bulk_ok)
        });
        let hits: u64 = parts.iter().map(|x| x.0).sum();
        let q = hits as f64 / count as f64;
        let w = weights[j];
        sampled_weight += w;
        prob += w * q;
        var += (w * binomial_se(q, count)).powi(2);
        if j == k {
            dominant = EstimateResult {
                prob: w * q,
                std_error: w * binomial_se(q, count),
                samples: count,
                hits,
                method: "structured".into(),
            };
            if slack_n.is_some() {
                bulk_factor = Some(parts.iter().map(|x| x.1).sum::<u64>() as f64 / count as f64);
            }
        }
        strata.push(Stratum { big: j, weight: w, samples: count, hits });
    }
    let total_hits = strata.iter().map(|s| s.hits).sum();
    Ok(StructuredEstimate {
        estimate: EstimateResult { prob, std_error: var.sqrt(), samples, hits: total_hits, method: "structured".into() },
        dominant,
        strata,
        unsampled_weight: (1.0 - sampled_weight).max(0.0),
        bulk_factor,
        rhs,
    })
}

fn level_alpha(level: &Level, kr: &KrhoResult) -> Result<f64> {
    kr.finite_value()?;
    level.alpha().ok_or_else(|| invalid("the scheme has no tail index; cannot form the asymptotic prediction"))
}

/// One replica with exactly `big` coordinates above `threshold`; returns `(S_n, bulk)`.
fn stratum_draw<R: Rng + ?Sized>(level: &Level, big: usize, threshold: f64, rng: &mut R) -> (f64, f64) {
    let mut jumps = Acc::new(level);
    let mut bulk = Acc::new(level);
    for _ in 0..big {
        jumps.add(level.sample_above(threshold, rng).expect("positive weight"));
    }
    for _ in big as u64..level.n {
        bulk.add(level.sample_at_most(threshold, rng).expect("positive weight"));
    }
    let total = Acc { step: jumps.step, total: jumps.total + bulk.total };
    (total.value(), bulk.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rare_event::{estimate_interval, exact_interval};
    use crate::scheme::SchemeSpec;

    #[test]
    fn tk_matches_exact_on_grid() {
        let spec = SchemeSpec::discrete_grid(vec![0.2, 0.1, 0.15, 0.25, 0.1, 0.2]).unwrap();
        let lv = spec.level(10).unwrap();
        // k = 1: interval mass of the pmf itself
        let r1 = tk_window_prob(&lv, 1, 0.35, 0.85, 200_000, 1).unwrap();
        let e1 = exact_interval(&lv, 1, 3.5, 8.5).unwrap();
        assert!((r1.prob - e1).abs() <= 4.0 * r1.std_error + 1e-15, "{r1:?} vs {e1}");
        let r2 = tk_window_prob(&lv, 2, 1.35, 1.75, 200_000, 2).unwrap();
        let e2 = exact_interval(&lv, 2, 13.5, 17.5).unwrap();
        assert!((r2.prob - e2).abs() <= 4.0 * r2.std_error, "{r2:?} vs {e2}");
        assert_eq!(r2.method, "conditioned");
    }

    #[test]
    fn structured_matches_naive_on_grid() {
        let spec = SchemeSpec::discrete_grid(vec![0.4, 0.3, 0.1, 0.1, 0.05, 0.05]).unwrap();
        let lv = spec.level(20).unwrap();
        let mu = lv.exact_mean().unwrap().0;
        let w = RhoWindow::fixed(0.5, 0.3).unwrap();
        let (lo, hi) = w.interval(20, mu);
        let exact = exact_interval(&lv, 20, lo, hi).unwrap();
        let s = estimate_structured(&lv, &w, mu, 0.3, 400_000, 3, Some(f64::INFINITY), None).unwrap();
        assert!((s.estimate.prob - exact).abs() <= 4.0 * s.estimate.std_error + 1e-3 * exact, "{s:?} vs {exact}");
        assert_eq!(s.bulk_factor, Some(1.0));
        let naive = estimate_interval(&lv, lo, hi, 200_000, 4).unwrap();
        assert!((naive.prob - exact).abs() <= 4.0 * naive.std_error);
    }

    #[test]
    fn eps_range() {
        let lv = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().level(64).unwrap();
        let w = RhoWindow::fixed(0.5, 0.1).unwrap();
        assert!(estimate_structured(&lv, &w, 3.0, 0.6, 1000, 1, None, None).is_err());
        assert!(estimate_structured(&lv, &w, 3.0, 0.0, 1000, 1, None, None).is_err());
    }
}
