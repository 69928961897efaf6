//! Empirical check of the out-degree tail against `C g^-1(a)^-beta`, and the
//! lattice-count versus volume discrepancy.

use serde::{Deserialize, Serialize};

use super::{
    ball_point_count, ball_volume, g_inverse, inverse_4d_constant, lattice_tail_constant, norm_histogram,
    sample_radius, vertex_count,
};
use crate::error::{invalid, Result};
use crate::rng::{batched, DEFAULT_BATCH};
use crate::stats::binomial_se;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    #[serde(rename = "N")]
    pub half_width: u64,
    pub n: u64,
    pub a: f64,
    pub draws: u64,
    /// Empirical `P(W^(n) >= a n)`.
    pub prob: f64,
    pub std_error: f64,
    /// The same probability from the radius law, `q^(-beta/2)` at the threshold norm.
    pub exact_prob: f64,
    /// `n^(beta/d) prob` and its standard error.
    pub scaled: f64,
    pub scaled_se: f64,
    /// `C g^-1(a)^-beta` with `C = (4/d)^(beta/2)`.
    pub target: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub d: u32,
    pub beta: f64,
    pub points: Vec<TailPoint>,
    /// `scaled / g^-1(a)^-beta` at the largest `N`, inverse-variance pooled over `a`.
    pub measured_constant: f64,
    pub measured_se: f64,
    /// `(4/d)^(beta/2)`.
    pub analytic_constant: f64,
    /// `(4d)^(-beta/2)`, kept for comparison.
    pub inverse_4d_constant: f64,
}

/// Smallest `q` with `#{w != 0 : |w|^2 <= q} >= t`, or `None` if `t > n - 1`.
fn threshold_norm(d: u32, half_width: u64, t: u64) -> Option<u64> {
    let n = vertex_count(d, half_width)?;
    if t > n - 1 {
        return None;
    }
    let (mut lo, mut hi) = (0u64, d as u64 * half_width * half_width);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ball_point_count(d, half_width, (mid as f64 + 0.5).sqrt()) >= t {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// Measures `n^(beta/d) P(W^(n) >= a n)` for each `N` and `a`.
pub fn calibrate_h(
    d: u32,
    beta: f64,
    half_widths: &[u64],
    a_values: &[f64],
    draws: u64,
    seed: u64,
) -> Result<CalibrationReport> {
    if d == 0 || !(beta / d as f64 > 1.0) {
        return Err(invalid(format!("need d >= 1 and beta/d > 1, got d = {d}, beta = {beta}")));
    }
    if half_widths.is_empty() || a_values.is_empty() {
        return Err(invalid("need at least one N and one a"));
    }
    if let Some(a) = a_values.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(invalid(format!("a must lie in (0, 1), got {a}")));
    }
    let alpha = beta / d as f64;
    let constant = lattice_tail_constant(d, beta);
    let mut points = Vec::new();
    for (i, &half) in half_widths.iter().enumerate() {
        let n = vertex_count(d, half).ok_or_else(|| invalid(format!("torus with N = {half} is too large")))?;
        let nf = n as f64;
        let thresholds: Vec<u64> = a_values.iter().map(|a| (a * nf).ceil() as u64).collect();
        let hits = batched(seed.wrapping_add(i as u64), draws, DEFAULT_BATCH, |rng, count, _| {
            let mut h = vec![0u64; thresholds.len()];
            for _ in 0..count {
                let w = ball_point_count(d, half, sample_radius(beta, rng));
                for (slot, &t) in h.iter_mut().zip(&thresholds) {
                    *slot += (w >= t) as u64;
                }
            }
            h
        });
        for (j, &a) in a_values.iter().enumerate() {
            let count: u64 = hits.iter().map(|h| h[j]).sum();
            let prob = count as f64 / draws as f64;
            let se = binomial_se(prob, draws);
            let exact_prob = match threshold_norm(d, half, thresholds[j]) {
                None => 0.0,
                Some(0) => 1.0,
                Some(q) => (q as f64).powf(-beta / 2.0).min(1.0),
            };
            let scale = nf.powf(alpha);
            let target = constant * g_inverse(d, a)?.powf(-beta);
            let (scaled, scaled_se) = (scale * prob, scale * se);
            let z = if scaled_se > 0.0 { (scaled - target) / scaled_se } else { f64::NAN };
            points.push(TailPoint {
                half_width: half,
                n,
                a,
                draws,
                prob,
                std_error: se,
                exact_prob,
                scaled,
                scaled_se,
                target,
                z,
            });
        }
    }
    let top = *half_widths.iter().max().expect("non-empty");
    let (mut num, mut den) = (0.0, 0.0);
    for p in points.iter().filter(|p| p.half_width == top) {
        let unit = g_inverse(d, p.a)?.powf(-beta);
        let (c, se) = (p.scaled / unit, p.scaled_se / unit);
        if se > 0.0 {
            num += c / (se * se);
            den += 1.0 / (se * se);
        }
    }
    let (measured_constant, measured_se) = if den > 0.0 { (num / den, den.sqrt().recip()) } else { (f64::NAN, f64::NAN) };
    Ok(CalibrationReport {
        d,
        beta,
        points,
        measured_constant,
        measured_se,
        analytic_constant: constant,
        inverse_4d_constant: inverse_4d_constant(d, beta),
    })
}

/// `max_R |ball_point_count(R) - ball_volume(R)| / N^(d-1)`, taken over every `R > 0`.
///
/// The count only changes when `R^2` crosses an integer, so the supremum is
/// attained at the ends of the intervals `(q, q + 1]`.
pub fn sandwich_constant(d: u32, half_width: u64) -> f64 {
    let cum = norm_histogram(d, half_width);
    let vol = |q: f64| ball_volume(d, half_width, q.sqrt());
    let mut worst: f64 = 0.0;
    for (q, &c) in cum.iter().enumerate() {
        let c = c as f64;
        let upper = if q + 1 == cum.len() { (2.0 * half_width as f64).powi(d as i32) } else { vol(q as f64 + 1.0) };
        worst = worst.max((c - vol(q as f64)).abs()).max((c - upper).abs());
    }
    // R^2 in (0, 1]: no points, volume up to vol(1)
    worst = worst.max(vol(1.0));
    worst / (half_width as f64).powi(d as i32 - 1)
}
