//! The condensation constant
//! `K_rho = ∫ h(x_1) ⋯ h(x_{k-1}) h(rho - x_1 - ⋯ - x_{k-1}) dx`
//! over the slab where every coordinate lies in `(0, 1)`, with `k = ⌈rho⌉`.
//!
//! The grid method integrates in tail-mass coordinates `m = ∫_x^1 h`, in which
//! the large coordinates are uniform, and solves the constraint for the
//! smallest coordinate. The singular end of `h` near 1 never gets evaluated.

use serde::{Deserialize, Serialize};

use crate::density::ShapeDensity;
use crate::error::{domain, invalid, Error, Result};
use crate::quad::composite_gl;
use crate::rng::{batched, open_unit, DEFAULT_BATCH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KrhoMethod {
    Grid,
    MonteCarlo,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrhoResult {
    pub value: f64,
    pub abs_error_bound: f64,
    pub method: KrhoMethod,
    pub diverged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl KrhoResult {
    pub fn finite_value(&self) -> Result<f64> {
        if self.diverged || !self.value.is_finite() {
            Err(Error::Diverged(self.note.clone().unwrap_or_else(|| "K_rho did not stabilise".into())))
        } else {
            Ok(self.value)
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrhoOptions {
    /// Force a method; by default grid for `k <= 3`, Monte Carlo above.
    pub method: Option<KrhoMethod>,
    pub seed: u64,
    /// Sample cap for the Monte Carlo method.
    pub max_samples: u64,
}

impl Default for KrhoOptions {
    fn default() -> Self {
        Self { method: None, seed: 0x4b72686f, max_samples: 1 << 26 }
    }
}

/// Monte Carlo error bars are reported as this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;
const GROWTH_LEVELS: usize = 6;
const MAX_PANELS_K2: usize = 1 << 16;
const MAX_PANELS_K3: usize = 1 << 9;
const MC_START: u64 = 1 << 16;
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

pub fn check_rho(rho: f64, k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }
    if !(rho > (k - 1) as f64 && rho < k as f64) {
        return Err(domain(format!("rho = {rho} is not in ({}, {k})", k - 1)));
    }
    Ok(())
}

pub fn krho_eval(h: &dyn ShapeDensity, rho: f64, k: usize, tol: f64) -> Result<KrhoResult> {
    krho_eval_with(h, rho, k, tol, &KrhoOptions::default())
}

pub fn krho_eval_with(h: &dyn ShapeDensity, rho: f64, k: usize, tol: f64, opts: &KrhoOptions) -> Result<KrhoResult> {
    check_rho(rho, k)?;
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    if k == 1 {
        return Ok(KrhoResult {
            value: h.eval(rho),
            abs_error_bound: 0.0,
            method: KrhoMethod::ClosedForm,
            diverged: false,
            note: None,
        });
    }
    match opts.method.unwrap_or(if k <= 3 { KrhoMethod::Grid } else { KrhoMethod::MonteCarlo }) {
        KrhoMethod::Grid => krho_grid(h, rho, k, tol),
        KrhoMethod::MonteCarlo => krho_monte_carlo_to_tol(h, rho, k, tol, opts),
        KrhoMethod::ClosedForm => Err(Error::Unsupported("closed form exists only for k = 1".into())),
    }
}

fn grid_k2(h: &dyn ShapeDensity, rho: f64, panels: usize) -> f64 {
    let top = h.tail_mass(rho / 2.0);
    2.0 * composite_gl(|m| h.eval(rho - h.tail_point(m)), 0.0, top, panels)
}

fn grid_k3(h: &dyn ShapeDensity, rho: f64, panels: usize) -> f64 {
    // third coordinate is the smallest: x3 <= x1 and x3 <= x2
    let inner = |x1: f64| {
        let lower = (rho - 2.0 * x1).max(0.5 * (rho - x1));
        if lower >= 1.0 {
            return 0.0;
        }
        composite_gl(|m| h.eval(rho - x1 - h.tail_point(m)), 0.0, h.tail_mass(lower), panels)
    };
    let first = (0.5 * (rho - 1.0)).max(rho - 2.0);
    let split = h.tail_mass(rho / 3.0);
    let top = h.tail_mass(first);
    let outer = |m: f64| inner(h.tail_point(m));
    3.0 * (composite_gl(outer, 0.0, split, panels) + composite_gl(outer, split, top, panels))
}

/// Iterated Gauss–Legendre in tail-mass coordinates, doubling the panel count.
pub fn krho_grid(h: &dyn ShapeDensity, rho: f64, k: usize, tol: f64) -> Result<KrhoResult> {
    check_rho(rho, k)?;
    let (rule, max_panels): (fn(&dyn ShapeDensity, f64, usize) -> f64, usize) = match k {
        2 => (grid_k2, MAX_PANELS_K2),
        3 => (grid_k3, MAX_PANELS_K3),
        _ => return Err(Error::Unsupported(format!("grid method handles k = 2 or 3, got {k}"))),
    };
    if !h.tail_mass(rho / k as f64).is_finite() {
        return Ok(diverged(KrhoMethod::Grid, "h is not integrable near 1"));
    }
    let mut panels = 1;
    let mut prev = rule(h, rho, panels);
    let mut growth = 0;
    loop {
        panels *= 2;
        let next = rule(h, rho, panels);
        let delta = next - prev;
        let bound = delta.abs().max(1e-13 * next.abs());
        if !next.is_finite() {
            return Ok(diverged(KrhoMethod::Grid, "integrand not finite"));
        }
        growth = if prev > 0.0 && next > 1.01 * prev { growth + 1 } else { 0 };
        if growth >= GROWTH_LEVELS {
            return Ok(diverged(KrhoMethod::Grid, "grid estimate kept growing under refinement"));
        }
        if delta.abs() <= tol || panels >= max_panels {
            let note = (delta.abs() > tol).then(|| format!("panel cap {max_panels} reached before tolerance"));
            return Ok(KrhoResult { value: next, abs_error_bound: bound, method: KrhoMethod::Grid, diverged: false, note });
        }
        prev = next;
    }
}

fn diverged(method: KrhoMethod, why: &str) -> KrhoResult {
    KrhoResult { value: f64::INFINITY, abs_error_bound: f64::INFINITY, method, diverged: true, note: Some(why.into()) }
}

/// Balance-heuristic importance sampling over the `k` ways of solving the
/// constraint for one coordinate. Coordinates are proposed from `h`
/// restricted to `(rho - k + 1, 1)`; the first proposal is stratified.
pub fn krho_monte_carlo(h: &dyn ShapeDensity, rho: f64, k: usize, samples: u64, seed: u64) -> Result<KrhoResult> {
    check_rho(rho, k)?;
    if k < 2 {
        return Err(invalid("Monte Carlo needs k >= 2"));
    }
    if samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    let lo = rho - (k - 1) as f64;
    let mass = h.tail_mass(lo);
    if !mass.is_finite() || mass <= 0.0 {
        return Ok(diverged(KrhoMethod::MonteCarlo, "h has no finite mass above rho - k + 1"));
    }
    let scale = k as f64 * mass.powi(k as i32 - 1);
    let moments = batched(seed, samples, DEFAULT_BATCH, |rng, count, first| {
        let mut x = vec![0.0; k];
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for r in first..first + count {
            let solved = (r % k as u64) as usize;
            let mut total = 0.0;
            let mut drawn = 0;
            for (i, xi) in x.iter_mut().enumerate() {
                if i == solved {
                    continue;
                }
                let u = if drawn == 0 { (r as f64 + 1.0 - open_unit(rng)) / samples as f64 } else { open_unit(rng) };
                drawn += 1;
                *xi = h.tail_point(mass * u);
                total += *xi;
            }
            x[solved] = rho - total;
            let w = if x[solved] > 0.0 && x[solved] < 1.0 {
                // proposals that round to 1.0 still lie in (lo, 1)
                let inv: f64 = x.iter().map(|&v| 1.0 / h.eval(v.min(BELOW_ONE))).sum();
                if inv.is_finite() && inv > 0.0 {
                    scale / inv
                } else {
                    0.0
                }
            } else {
                0.0
            };
            s1 += w;
            s2 += w * w;
        }
        (s1, s2)
    });
    let (s1, s2) = moments.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    let se = (var / nf).sqrt();
    Ok(KrhoResult {
        value: mean,
        abs_error_bound: MC_SIGMAS * se,
        method: KrhoMethod::MonteCarlo,
        diverged: !mean.is_finite(),
        note: None,
    })
}

fn krho_monte_carlo_to_tol(h: &dyn ShapeDensity, rho: f64, k: usize, tol: f64, opts: &KrhoOptions) -> Result<KrhoResult> {
    let mut samples = MC_START.min(opts.max_samples.max(2));
    loop {
        let mut res = krho_monte_carlo(h, rho, k, samples, opts.seed)?;
        if res.diverged || res.abs_error_bound <= tol {
            return Ok(res);
        }
        if samples >= opts.max_samples {
            res.note = Some(format!("sample cap {} reached before tolerance", opts.max_samples));
            return Ok(res);
        }
        // standard error scales as samples^-1/2
        let want = (samples as f64 * (res.abs_error_bound / tol).powi(2) * 1.2).ceil() as u64;
        samples = want.clamp(2 * samples, opts.max_samples);
    }
}

/// Unnormalised limit density of the first `k - 1` jump sizes; zero off the support.
pub fn jump_density(h: &dyn ShapeDensity, rho: f64, k: usize, x: &[f64]) -> f64 {
    if k == 0 || x.len() + 1 != k {
        return 0.0;
    }
    let last = rho - x.iter().sum::<f64>();
    if !x.iter().chain(std::iter::once(&last)).all(|&v| v > 0.0 && v < 1.0) {
        return 0.0;
    }
    x.iter().map(|&v| h.eval(v)).product::<f64>() * h.eval(last)
}

/// `K_rho` for the measure `h(x) dx + atom δ_1`, i.e. including the mass the
/// cut-off piles at `W^(n) = n`. Only diagnostic: the main constant excludes it.
pub fn krho_with_atom(h: &dyn ShapeDensity, rho: f64, k: usize, tol: f64) -> Result<KrhoResult> {
    check_rho(rho, k)?;
    let a = h.atom();
    let mut value = 0.0;
    let mut bound = 0.0;
    let mut choose = 1.0;
    for j in 0..k {
        // j coordinates sit on the atom at 1
        let part = krho_eval(h, rho - j as f64, k - j, tol)?;
        if part.diverged {
            return Ok(part);
        }
        value += choose * a.powi(j as i32) * part.value;
        bound += choose * a.powi(j as i32) * part.abs_error_bound;
        choose *= (k - j) as f64 / (j + 1) as f64;
    }
    Ok(KrhoResult { value, abs_error_bound: bound, method: KrhoMethod::Grid, diverged: false, note: Some(format!("atom {a}")) })
}
