//! Ratio of the rare-event probability to its asymptotic prediction over `n`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{estimate_naive, estimate_structured, exact_dp, theorem1_rhs, RhoWindow};
use crate::error::{invalid, Result};
use crate::krho::KrhoResult;
use crate::scheme::{mean_mu_n, SchemeSpec};

/// What `S_n` is centred on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// `mu_n = E W^(n)`.
    FiniteN,
    /// The scheme's limiting mean.
    Limit,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub method: String,
    pub prob: f64,
    pub std_error: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub samples: u64,
    pub seed: u64,
    /// Adds a structured row per `n` with this `eps`.
    pub structured_eps: Option<f64>,
    /// Uses the exact convolution for grid schemes when it fits.
    pub exact: bool,
}

impl SweepOptions {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, structured_eps: None, exact: true }
    }
}

/// One row per `n` (two when a structured `eps` is given). A failure at one
/// `n` is recorded in that row and the sweep moves on.
pub fn ratio_sweep(
    spec: &SchemeSpec,
    window: &RhoWindow,
    ns: &[u64],
    krho: &KrhoResult,
    centering: Centering,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    let alpha = spec.alpha()?;
    krho.finite_value()?;
    if centering == Centering::Limit && spec.mu().is_none() {
        return Err(invalid("limit centering needs a scheme with a known mean"));
    }
    let mut rows = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let seed = opts.seed.wrapping_add(i as u64);
        let rhs = theorem1_rhs(n, window.width(n), window.k, alpha, krho)?;
        let failed = |method: &str, e: crate::Error| SweepRow {
            n,
            method: method.into(),
            prob: f64::NAN,
            std_error: f64::NAN,
            rhs,
            ratio: f64::NAN,
            error: Some(e.to_string()),
        };
        let level = match spec.level(n) {
            Ok(l) => l,
            Err(e) => {
                log::warn!("n = {n}: {e}");
                rows.push(failed("none", e));
                continue;
            }
        };
        if !window.inside_slab(n) {
            log::warn!("n = {n}: window leaves the slab ({}, {})", window.k - 1, window.k);
        }
        let mu_ref = match centering {
            Centering::FiniteN => mean_mu_n(&level, opts.samples.max(100), seed ^ 0x5EED).value,
            Centering::Limit => spec.mu().expect("checked"),
            Centering::Fixed(v) => v,
        };
        let (lo, hi) = window.interval(n, mu_ref);
        let main = if opts.exact && spec.is_grid() {
            match exact_dp(spec, n, lo, hi) {
                Ok(p) => Ok(("exact".to_string(), p, 0.0)),
                Err(e) => {
                    log::info!("n = {n}: exact convolution unavailable ({e}), sampling instead");
                    estimate_naive(&level, window, mu_ref, opts.samples, seed).map(|r| (r.method, r.prob, r.std_error))
                }
            }
        } else {
            estimate_naive(&level, window, mu_ref, opts.samples, seed).map(|r| (r.method, r.prob, r.std_error))
        };
        match main {
            Ok((method, prob, se)) => rows.push(SweepRow { n, method, prob, std_error: se, rhs, ratio: prob / rhs, error: None }),
            Err(e) => rows.push(failed("naive", e)),
        }
        if let Some(eps) = opts.structured_eps {
            match estimate_structured(&level, window, mu_ref, eps, opts.samples, seed ^ 0xA5A5, None, None) {
                Ok(s) => rows.push(SweepRow {
                    n,
                    method: "structured".into(),
                    prob: s.estimate.prob,
                    std_error: s.estimate.std_error,
                    rhs,
                    ratio: s.estimate.prob / rhs,
                    error: None,
                }),
                Err(e) => rows.push(failed("structured", e)),
            }
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "n,method,prob,std_error,rhs,ratio")?;
    for r in rows {
        writeln!(out, "{},{},{:e},{:e},{:e},{:e}", r.n, r.method, r.prob, r.std_error, r.rhs, r.ratio)?;
    }
    out.flush()?;
    Ok(())
}
