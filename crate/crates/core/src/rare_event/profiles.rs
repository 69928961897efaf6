//! Conditioned replicas and their jump structure.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RhoWindow;
use crate::density::ShapeDensity;
use crate::error::{invalid, Error, Result};
use crate::krho::{krho_eval, KrhoResult};
use crate::quad::{composite_gl, integrate_singular, Singular};
use crate::rng::{open_unit, stream, DEFAULT_BATCH};
use crate::scheme::{sample_sum, Level};
use crate::stats::chi_square_sf;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpProfile {
    pub n: u64,
    /// `(index, value)` of every coordinate above `eps n`, largest first.
    pub big_jumps: Vec<(usize, f64)>,
    pub bulk_sum: f64,
    /// `bulk_sum` plus the big jumps, summed in the order listed.
    pub s_n: f64,
}

impl JumpProfile {
    /// Splits a coordinate vector at `eps n`; a value equal to `eps n` is not big.
    pub fn from_vector(values: &[f64], eps: f64) -> Self {
        let n = values.len() as u64;
        let threshold = eps * n as f64;
        let mut big: Vec<(usize, f64)> = Vec::new();
        let mut bulk_sum = 0.0;
        for (i, &v) in values.iter().enumerate() {
            if v > threshold {
                big.push((i, v));
            } else {
                bulk_sum += v;
            }
        }
        big.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let s_n = big.iter().fold(bulk_sum, |acc, &(_, v)| acc + v);
        Self { n, big_jumps: big, bulk_sum, s_n }
    }

    pub fn big_sum(&self) -> f64 {
        self.big_jumps.iter().map(|&(_, v)| v).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRun {
    pub profiles: Vec<JumpProfile>,
    /// Replicas drawn up to and including the last kept hit (or all, if short).
    pub samples_used: u64,
    pub target_reached: bool,
}

const ROUND_BATCHES: u64 = 16;

/// Rejection sampling of `S_n ∈ I_n`: keeps the decomposed coordinate vector of
/// every hit until `target_hits` are found or `max_samples` replicas are spent.
#[allow(clippy::too_many_arguments)]
pub fn conditional_profiles(
    level: &Level,
    window: &RhoWindow,
    mu_ref: f64,
    eps: f64,
    target_hits: usize,
    max_samples: u64,
    seed: u64,
) -> Result<ProfileRun> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must be in (0, 1), got {eps}")));
    }
    if target_hits < 100 {
        log::warn!("target_hits = {target_hits} is below the recommended 100");
    }
    let (lo, hi) = window.interval(level.n, mu_ref);
    let total_batches = max_samples.div_ceil(DEFAULT_BATCH);
    let mut profiles = Vec::new();
    let mut next_batch = 0u64;
    while next_batch < total_batches {
        let end = (next_batch + ROUND_BATCHES).min(total_batches);
        let round: Vec<Vec<(u64, JumpProfile)>> = (next_batch..end)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream(seed, b);
                let first = b * DEFAULT_BATCH;
                let count = DEFAULT_BATCH.min(max_samples - first);
                let mut kept = Vec::new();
                for r in first..first + count {
                    let values = sample_sum(level, &mut rng, true).1.expect("vector kept");
                    let p = JumpProfile::from_vector(&values, eps);
                    if p.s_n >= lo && p.s_n <= hi {
                        kept.push((r, p));
                    }
                }
                kept
            })
            .collect();
        for (r, p) in round.into_iter().flatten() {
            profiles.push(p);
            if profiles.len() == target_hits {
                return Ok(ProfileRun { profiles, samples_used: r + 1, target_reached: true });
            }
        }
        next_batch = end;
    }
    log::warn!("only {} of {target_hits} hits after {max_samples} samples", profiles.len());
    Ok(ProfileRun { profiles, samples_used: max_samples, target_reached: false })
}

/// Fraction of profiles with exactly `k` big jumps whose big-jump sum is within
/// `gamma n` of `rho n` and whose bulk is within `gamma n` of `mu_ref n`.
pub fn corollary1_fraction(profiles: &[JumpProfile], k: usize, gamma: f64, mu_ref: f64, rho: f64) -> f64 {
    if profiles.is_empty() {
        return 0.0;
    }
    let good = profiles
        .iter()
        .filter(|p| {
            let nf = p.n as f64;
            p.big_jumps.len() == k
                && (p.big_sum() - rho * nf).abs() <= gamma * nf
                && (p.bulk_sum - mu_ref * nf).abs() <= gamma * nf
        })
        .count();
    good as f64 / profiles.len() as f64
}

/// Fraction of profiles with at least `count` big jumps.
pub fn fraction_with_at_least(profiles: &[JumpProfile], count: usize) -> f64 {
    if profiles.is_empty() {
        return 0.0;
    }
    profiles.iter().filter(|p| p.big_jumps.len() >= count).count() as f64 / profiles.len() as f64
}

pub fn write_profiles_jsonl(profiles: &[JumpProfile], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in profiles {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct GofOptions {
    pub bins: usize,
    /// Picks which of the `k` jumps plays `X_1`.
    pub seed: u64,
    /// Adds the point masses at 1 that the cut-off `W ∧ n` leaves (k = 2 only).
    pub include_atom: bool,
    /// Scales each jump vector so its entries sum to `rho` before binning.
    pub rescale: bool,
}

impl GofOptions {
    pub fn new(bins: usize, seed: u64) -> Self {
        Self { bins, seed, include_atom: false, rescale: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Profiles with exactly `k` big jumps.
    pub used: usize,
    pub skipped: usize,
    /// Bin edges after merging.
    pub edges: Vec<f64>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    /// How many merges were needed to reach 5 expected counts per bin.
    pub merges: usize,
    /// Sum of the reference bin masses over `K_rho`; should be close to 1.
    pub mass_check: f64,
}

/// Chi-square test of the first normalised jump `X_1 = W_{i_1} / n` (a
/// uniformly chosen one of the `k`) against the marginal of the limit density.
pub fn corollary2_gof(
    profiles: &[JumpProfile],
    h: &dyn ShapeDensity,
    rho: f64,
    k: usize,
    krho: &KrhoResult,
    opts: &GofOptions,
) -> Result<GofResult> {
    if k < 2 {
        return Err(invalid("the jump-size test needs k >= 2"));
    }
    if opts.bins == 0 {
        return Err(invalid("bins must be positive"));
    }
    if opts.include_atom && k != 2 {
        return Err(Error::Unsupported("atom correction is implemented for k = 2".into()));
    }
    let kval = krho.finite_value()?;
    let lo = (rho - (k - 1) as f64).max(0.0);
    let width = (1.0 - lo) / opts.bins as f64;
    let edges: Vec<f64> = (0..=opts.bins).map(|i| if i == opts.bins { 1.0 } else { lo + i as f64 * width }).collect();

    let marginal = |x: f64| -> f64 {
        if k == 2 {
            h.eval(x) * h.eval(rho - x)
        } else {
            krho_eval(h, rho - x, k - 1, 1e-9).map(|r| h.eval(x) * r.value).unwrap_or(0.0)
        }
    };
    let mut mass: Vec<f64> = edges
        .windows(2)
        .map(|e| {
            if k == 2 {
                integrate_singular(marginal, e[0], e[1], 1e-11, Singular::BOTH).value
            } else {
                composite_gl(marginal, e[0], e[1], 4)
            }
        })
        .collect();
    let mut reference = kval;
    if opts.include_atom {
        let extra = h.atom() * h.eval(rho - 1.0);
        mass[0] += extra;
        *mass.last_mut().expect("bins > 0") += extra;
        reference += 2.0 * extra;
    }
    let total: f64 = mass.iter().sum();

    let mut rng = stream(opts.seed, 0);
    let mut observed = vec![0u64; opts.bins];
    let (mut used, mut skipped) = (0usize, 0usize);
    for p in profiles {
        if p.big_jumps.len() != k {
            skipped += 1;
            continue;
        }
        let nf = p.n as f64;
        let pick = rng.random_range(0..k);
        let mut x = p.big_jumps[pick].1 / nf;
        if opts.rescale {
            x *= rho / (p.big_sum() / nf);
        }
        let bin = edges[1..].partition_point(|&e| e < x).min(opts.bins - 1);
        observed[bin] += 1;
        used += 1;
    }
    if skipped > 0 {
        log::info!("{skipped} profiles without exactly {k} big jumps were skipped");
    }
    let expected: Vec<f64> = mass.iter().map(|m| used as f64 * m / total).collect();

    // merge left to right until every bin expects at least 5
    let mut merged_edges = vec![edges[0]];
    let mut merged_obs = Vec::new();
    let mut merged_exp = Vec::new();
    let (mut o_acc, mut e_acc) = (0u64, 0.0);
    for i in 0..opts.bins {
        o_acc += observed[i];
        e_acc += expected[i];
        if e_acc >= 5.0 {
            merged_obs.push(o_acc);
            merged_exp.push(e_acc);
            merged_edges.push(edges[i + 1]);
            o_acc = 0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0 {
        if let (Some(o), Some(e)) = (merged_obs.last_mut(), merged_exp.last_mut()) {
            *o += o_acc;
            *e += e_acc;
            *merged_edges.last_mut().expect("edge") = 1.0;
        } else {
            merged_obs.push(o_acc);
            merged_exp.push(e_acc);
            merged_edges.push(1.0);
        }
    }
    let merges = opts.bins - merged_obs.len();
    if merges > 0 {
        log::info!("merged {merges} bins to keep expected counts >= 5");
    }
    let statistic: f64 = merged_obs
        .iter()
        .zip(&merged_exp)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = merged_obs.len().saturating_sub(1);
    let p_value = if dof == 0 { 1.0 } else { chi_square_sf(statistic, dof) };
    Ok(GofResult {
        statistic: if dof == 0 { 0.0 } else { statistic },
        dof,
        p_value,
        used,
        skipped,
        edges: merged_edges,
        observed: merged_obs,
        expected: merged_exp,
        merges,
        mass_check: total / reference,
    })
}

/// Exact-up-to-tabulation sampler of the `k = 2` limit jump vector.
///
/// The larger jump is drawn in tail-mass coordinates from the density
/// `h(rho - P(m))`, tabulated on a fine grid and inverted piecewise linearly.
pub struct LimitSampler {
    rho: f64,
    mass: Vec<f64>,
    cumulative: Vec<f64>,
    points: Vec<f64>,
}

const LIMIT_PANELS: usize = 4096;

impl LimitSampler {
    pub fn new(h: &dyn ShapeDensity, rho: f64, k: usize) -> Result<Self> {
        if k != 2 {
            return Err(Error::Unsupported("limit sampling is implemented for k = 2".into()));
        }
        crate::krho::check_rho(rho, 2)?;
        let top = h.tail_mass(rho / 2.0);
        if !top.is_finite() {
            return Err(Error::Diverged("h is not integrable near 1".into()));
        }
        let step = top / LIMIT_PANELS as f64;
        let mut cumulative = vec![0.0; LIMIT_PANELS + 1];
        for i in 0..LIMIT_PANELS {
            let (a, b) = (i as f64 * step, (i + 1) as f64 * step);
            cumulative[i + 1] = cumulative[i] + composite_gl(|m| h.eval(rho - h.tail_point(m)), a, b, 1);
        }
        let mass = (0..=LIMIT_PANELS).map(|i| i as f64 * step).collect::<Vec<_>>();
        let points = mass.iter().map(|&m| h.tail_point(m)).collect();
        Ok(Self { rho, mass, cumulative, points })
    }

    /// Draws `(X_1, X_2)` in random order.
    pub fn sample<R: Rng + ?Sized>(&self, h: &dyn ShapeDensity, rng: &mut R) -> [f64; 2] {
        let total = *self.cumulative.last().expect("table");
        let target = total * (1.0 - open_unit(rng));
        let i = self.cumulative.partition_point(|&c| c <= target).clamp(1, self.cumulative.len() - 1) - 1;
        let span = self.cumulative[i + 1] - self.cumulative[i];
        let t = if span > 0.0 { (target - self.cumulative[i]) / span } else { 0.5 };
        let m = self.mass[i] + t * (self.mass[i + 1] - self.mass[i]);
        let big = if t == 0.0 { self.points[i] } else { h.tail_point(m) };
        let small = self.rho - big;
        if rng.random::<bool>() {
            [big, small]
        } else {
            [small, big]
        }
    }
}

/// Synthetic profiles whose big jumps are `n` times draws from the limit law.
pub fn profiles_from_limit(
    sampler: &LimitSampler,
    h: &dyn ShapeDensity,
    n: u64,
    count: usize,
    seed: u64,
) -> Vec<JumpProfile> {
    let mut rng = stream(seed, 0);
    let nf = n as f64;
    (0..count)
        .map(|_| {
            let x = sampler.sample(h, &mut rng);
            let mut big = vec![(0usize, x[0] * nf), (1usize, x[1] * nf)];
            big.sort_by(|a, b| b.1.total_cmp(&a.1));
            let s_n = big.iter().map(|b| b.1).sum();
            JumpProfile { n, big_jumps: big, bulk_sum: 0.0, s_n }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{ParetoShape, Uniform};
    use crate::krho::krho_eval;
    use crate::scheme::SchemeSpec;

    #[test]
    fn decomposition_is_exact() {
        let v = vec![0.5, 30.0, 1.25, 12.0, 40.0, 3.0, 12.5, 0.1];
        let p = JumpProfile::from_vector(&v, 1.5);
        assert_eq!(p.big_jumps, vec![(4, 40.0), (1, 30.0), (6, 12.5)]);
        assert_eq!(p.bulk_sum + 40.0 + 30.0 + 12.5, p.s_n);
        // threshold 12 exactly is not big
        assert!(p.big_jumps.iter().all(|&(i, _)| i != 3));
    }

    #[test]
    fn full_window_accepts_everything() {
        let lv = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().level(32).unwrap();
        let w = RhoWindow::between(-10.0, 40.0).unwrap();
        let run = conditional_profiles(&lv, &w, 0.0, 0.1, 500, 10_000, 1).unwrap();
        assert!(run.target_reached);
        assert_eq!(run.samples_used, 500);
        let (lo, hi) = w.interval(32, 0.0);
        assert!(run.profiles.iter().all(|p| p.s_n >= lo && p.s_n <= hi));
    }

    #[test]
    fn profiles_deterministic() {
        let lv = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().level(64).unwrap();
        let mu = lv.exact_mean().unwrap().0;
        let w = RhoWindow::fixed(0.5, 0.2).unwrap();
        let a = conditional_profiles(&lv, &w, mu, 0.2, 50, 200_000, 5).unwrap();
        let b = conditional_profiles(&lv, &w, mu, 0.2, 50, 200_000, 5).unwrap();
        assert_eq!(a, b);
        let (lo, hi) = w.interval(64, mu);
        assert!(a.profiles.iter().all(|p| p.s_n >= lo && p.s_n <= hi));
    }

    #[test]
    fn corollary1_counts() {
        let mk = |big: Vec<f64>, bulk: f64| {
            let s_n = big.iter().sum::<f64>() + bulk;
            JumpProfile { n: 100, big_jumps: big.into_iter().enumerate().collect(), bulk_sum: bulk, s_n }
        };
        let ps = vec![mk(vec![50.0], 300.0), mk(vec![30.0, 20.0], 300.0), mk(vec![70.0], 300.0)];
        assert!((corollary1_fraction(&ps, 1, 0.1, 3.0, 0.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!((fraction_with_at_least(&ps, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_k2_marginal() {
        // limit of X_1 for h = 1, rho = 1.5 is uniform on (0.5, 1)
        let h = Uniform { level: 1.0 };
        let kr = krho_eval(&h, 1.5, 2, 1e-10).unwrap();
        let s = LimitSampler::new(&h, 1.5, 2).unwrap();
        let ps = profiles_from_limit(&s, &h, 1000, 4000, 3);
        let g = corollary2_gof(&ps, &h, 1.5, 2, &kr, &GofOptions::new(8, 1)).unwrap();
        assert_eq!(g.dof, 7);
        for e in &g.expected {
            assert!((e - 500.0).abs() < 1e-6);
        }
        assert!((g.mass_check - 1.0).abs() < 1e-9);
        let one = corollary2_gof(&ps, &h, 1.5, 2, &kr, &GofOptions::new(1, 1)).unwrap();
        assert_eq!((one.statistic, one.p_value), (0.0, 1.0));
    }

    #[test]
    fn calibration_p_values_are_not_degenerate() {
        let h = ParetoShape { c: 1.2, alpha: 1.2 };
        let kr = krho_eval(&h, 1.5, 2, 1e-10).unwrap();
        let s = LimitSampler::new(&h, 1.5, 2).unwrap();
        let mut small = 0;
        for rep in 0..40 {
            let ps = profiles_from_limit(&s, &h, 256, 400, 100 + rep);
            let g = corollary2_gof(&ps, &h, 1.5, 2, &kr, &GofOptions::new(8, rep)).unwrap();
            small += (g.p_value < 0.01) as usize;
        }
        assert!(small <= 3, "{small} of 40 calibration runs rejected");
    }
}
