//! Lattice-torus random graph: every vertex of `[-N, N]^d` (wrapped with
//! period `2N + 1`) draws a Pareto radius `R` with `P(R > x) = x^-beta`,
//! `x >= 1`, and sends an edge to every other vertex of its open ball.

pub mod calibrate;
pub mod geometry;
pub mod graph;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::rng::open_unit;

pub use calibrate::{calibrate_h, sandwich_constant, CalibrationReport, TailPoint};
pub use geometry::{g_eval, g_inverse, g_prime, GeometryTable};
pub use graph::{
    condensation_stats, generate_graph, generate_graph_planted, CondensationStats, DegreeSummary, GraphLimits,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusConfig {
    pub d: u32,
    /// Half side length `N`; the torus has `(2N + 1)^d` vertices.
    #[serde(rename = "N")]
    pub half_width: u64,
    pub beta: f64,
    pub seed: u64,
}

impl TorusConfig {
    pub fn new(d: u32, half_width: u64, beta: f64, seed: u64) -> Result<Self> {
        let cfg = Self { d, half_width, beta, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d must be >= 1"));
        }
        if self.half_width == 0 {
            return Err(invalid("N must be >= 1"));
        }
        if !(self.beta > self.d as f64) {
            return Err(invalid(format!("beta must exceed d (beta={}, d={})", self.beta, self.d)));
        }
        vertex_count(self.d, self.half_width).ok_or_else(|| invalid("(2N+1)^d overflows"))?;
        Ok(())
    }

    /// Period of the wrap, `2N + 1`.
    pub fn side(&self) -> u64 {
        2 * self.half_width + 1
    }

    pub fn n(&self) -> u64 {
        vertex_count(self.d, self.half_width).expect("validated")
    }

    pub fn alpha(&self) -> f64 {
        self.beta / self.d as f64
    }
}

pub fn vertex_count(d: u32, half_width: u64) -> Option<u64> {
    (2 * half_width + 1).checked_pow(d)
}

/// Solves `(2N + 1)^d = n` for `N`.
pub fn half_width_for(d: u32, n: u64) -> Result<u64> {
    if d == 0 {
        return Err(invalid("d must be >= 1"));
    }
    let guess = (n as f64).powf(1.0 / d as f64).round() as u64;
    for side in guess.saturating_sub(2)..=guess + 2 {
        if side >= 3 && side % 2 == 1 && side.checked_pow(d) == Some(n) {
            return Ok((side - 1) / 2);
        }
    }
    Err(invalid(format!("n = {n} is not (2N+1)^{d} for an integer N >= 1")))
}

/// Euclidean norm of per-axis differences wrapped with period `side`.
pub fn torus_distance(side: u64, v: &[i64], w: &[i64]) -> f64 {
    let side = side as i64;
    v.iter()
        .zip(w)
        .map(|(a, b)| {
            let diff = (a - b).rem_euclid(side);
            let m = diff.min(side - diff) as f64;
            m * m
        })
        .sum::<f64>()
        .sqrt()
}

/// Largest `j >= 0` with `j^2 < r2`, if any.
#[inline]
fn max_below(r2: f64) -> Option<i64> {
    if r2 <= 0.0 {
        return None;
    }
    let mut j = r2.sqrt().ceil() as i64;
    while j > 0 && (j * j) as f64 >= r2 {
        j -= 1;
    }
    while (((j + 1) * (j + 1)) as f64) < r2 {
        j += 1;
    }
    Some(j)
}

fn count_rec(dims: u32, half: i64, r2: f64) -> u64 {
    let Some(top) = max_below(r2) else { return 0 };
    let top = top.min(half);
    if dims == 1 {
        return 2 * top as u64 + 1;
    }
    let mut total = count_rec(dims - 1, half, r2);
    for i in 1..=top {
        let sub = count_rec(dims - 1, half, r2 - (i * i) as f64);
        if sub == 0 {
            break;
        }
        total += 2 * sub;
    }
    total
}

/// Number of lattice points `w != 0` of the torus with `D(0, w) < radius`.
pub fn ball_point_count(d: u32, half_width: u64, radius: f64) -> u64 {
    if !(radius > 0.0) {
        return 0;
    }
    let n = vertex_count(d, half_width).expect("torus size fits u64");
    let r2 = radius * radius;
    let half = half_width as i64;
    // every wrapped offset has squared norm <= d N^2
    if r2 > (d as f64) * (half * half) as f64 {
        return n - 1;
    }
    if d == 1 {
        return 2 * max_below(r2).map_or(0, |j| j.min(half) as u64);
    }
    count_rec(d, half, r2) - 1
}

/// Calls `visit` with every offset `w != 0` of the open ball of `radius`,
/// each offset expressed in `[-N, N]^d`.
pub fn for_each_ball_offset<F: FnMut(&[i64])>(d: u32, half_width: u64, radius: f64, mut visit: F) {
    let half = half_width as i64;
    let mut buf = vec![0i64; d as usize];
    fn rec<F: FnMut(&[i64])>(axis: usize, half: i64, r2: f64, buf: &mut [i64], visit: &mut F) {
        let Some(top) = max_below(r2) else { return };
        let top = top.min(half);
        for i in -top..=top {
            buf[axis] = i;
            if axis + 1 == buf.len() {
                if buf.iter().any(|&c| c != 0) {
                    visit(buf);
                }
            } else {
                rec(axis + 1, half, r2 - (i * i) as f64, buf, visit);
            }
        }
        buf[axis] = 0;
    }
    if radius > 0.0 {
        rec(0, half, radius * radius, &mut buf, &mut visit);
    }
}

/// Inverse-CDF draw of `R` with `P(R > x) = x^-beta` for `x >= 1`.
pub fn sample_radius<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    open_unit(rng).powf(-1.0 / beta)
}

/// One draw of the out-degree of a vertex (identical for all vertices).
pub fn out_degree_sample<R: Rng + ?Sized>(config: &TorusConfig, rng: &mut R) -> u64 {
    let radius = sample_radius(config.beta, rng);
    ball_point_count(config.d, config.half_width, radius)
}

/// `(2N)^d g(R / (sqrt(d) N))`, the continuum volume of the clipped ball.
pub fn ball_volume(d: u32, half_width: u64, radius: f64) -> f64 {
    let n = half_width as f64;
    (2.0 * n).powi(d as i32) * g_eval(d, radius / ((d as f64).sqrt() * n))
}

/// Leading constant `(4/d)^(beta/2)` of `n^(beta/d) P(W >= a n) -> C g^-1(a)^-beta`.
pub fn lattice_tail_constant(d: u32, beta: f64) -> f64 {
    (4.0 / d as f64).powf(beta / 2.0)
}

/// The `(4d)^(-beta/2)` normalisation, reported next to the measured constant.
pub fn inverse_4d_constant(d: u32, beta: f64) -> f64 {
    (4.0 * d as f64).powf(-beta / 2.0)
}

/// Shape density of the out-degree law on the cut-off scale,
/// `C beta g^-1(x)^(-beta-1) / g'(g^-1(x))`.
pub fn h_lattice(d: u32, beta: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(domain(format!("h_lattice needs x in (0,1), got {x}")));
    }
    let r = g_inverse(d, x)?;
    let slope = g_prime(d, r);
    if slope <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(lattice_tail_constant(d, beta) * beta * r.powf(-beta - 1.0) / slope)
}

/// Exact `E W^(n) = sum_{w != 0} min(1, |w|^-beta)` over the torus offsets.
pub fn lattice_mean(d: u32, half_width: u64, beta: f64) -> f64 {
    let half = half_width as i64;
    fn rec(axis: u32, d: u32, half: i64, acc: i64, beta: f64) -> f64 {
        if axis == d {
            return if acc == 0 { 0.0 } else { (acc as f64).powf(-beta / 2.0).min(1.0) };
        }
        let mut s = rec(axis + 1, d, half, acc, beta);
        for i in 1..=half {
            s += 2.0 * rec(axis + 1, d, half, acc + i * i, beta);
        }
        s
    }
    rec(0, d, half, 0, beta)
}

/// `cum[q] = #{w != 0 : |w|^2 <= q}` over the torus offsets.
pub fn norm_histogram(d: u32, half: u64) -> Vec<u64> {
    let max_q = d as usize * (half * half) as usize;
    let mut counts = vec![0u64; max_q + 1];
    fn rec(axis: u32, d: u32, half: i64, acc: usize, mult: u64, counts: &mut [u64]) {
        if axis == d {
            counts[acc] += mult;
            return;
        }
        rec(axis + 1, d, half, acc, mult, counts);
        for i in 1..=half {
            rec(axis + 1, d, half, acc + (i * i) as usize, 2 * mult, counts);
        }
    }
    rec(0, d, half as i64, 0, 1, &mut counts);
    counts[0] = 0;
    for q in 1..counts.len() {
        counts[q] += counts[q - 1];
    }
    counts
}
