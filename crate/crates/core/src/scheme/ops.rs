//! Sampling operations on schemes.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Level, SchemeSpec};
use crate::density::check_unit_interval;
use crate::error::{invalid, Result};
use crate::estimate::EstimateResult;
use crate::rng::{batched, DEFAULT_BATCH};
use crate::stats::{binomial_se, mean_se};

/// One draw of `W^(n)`. Compiles the level on every call; use [`Level`] in loops.
pub fn sample_w<R: Rng + ?Sized>(spec: &SchemeSpec, n: u64, rng: &mut R) -> Result<f64> {
    Ok(spec.level(n)?.sample(rng))
}

/// `S_n` for one replica, optionally with the coordinate vector.
///
/// Grid sums are accumulated on the integer index and scaled once, so they
/// land exactly on the lattice the exact convolution uses.
pub fn sample_sum<R: Rng + ?Sized>(level: &Level, rng: &mut R, keep_vector: bool) -> (f64, Option<Vec<f64>>) {
    let n = level.n as usize;
    if let Some(g) = level.grid() {
        let mut idx_sum = 0u64;
        let mut values = keep_vector.then(|| Vec::with_capacity(n));
        for _ in 0..n {
            let i = g.index(crate::rng::open_unit(rng));
            idx_sum += i as u64;
            if let Some(v) = values.as_mut() {
                v.push(g.values[i]);
            }
        }
        return (idx_sum as f64 * g.step, values);
    }
    if keep_vector {
        let v: Vec<f64> = (0..n).map(|_| level.sample(rng)).collect();
        (v.iter().sum(), Some(v))
    } else {
        ((0..n).map(|_| level.sample(rng)).sum(), None)
    }
}

pub fn h_eval(spec: &SchemeSpec, x: f64) -> Result<f64> {
    let h = spec.density()?;
    check_unit_interval(x)?;
    Ok(h.eval(x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: String,
}

/// `E W^(n)`: exact where available, Monte Carlo over `samples` draws otherwise.
pub fn mean_mu_n(level: &Level, samples: u64, seed: u64) -> MeanEstimate {
    if let Some((value, method)) = level.exact_mean() {
        return MeanEstimate { value, std_error: 0.0, method: method.into() };
    }
    let draws: Vec<f64> = batched(seed, samples, DEFAULT_BATCH, |rng, count, _| {
        (0..count).map(|_| level.sample(rng)).collect::<Vec<_>>()
    })
    .concat();
    let (value, std_error) = mean_se(&draws);
    MeanEstimate { value, std_error, method: "monte_carlo".into() }
}

/// Empirical `P(|S_n - n mu_n| > zeta n)`.
pub fn lln_deviation(level: &Level, zeta: f64, samples: u64, seed: u64) -> Result<EstimateResult> {
    if samples < 100 {
        return Err(invalid("lln_deviation needs at least 100 samples"));
    }
    if !(zeta > 0.0) {
        return Err(invalid("zeta must be positive"));
    }
    let mu = mean_mu_n(level, 1_000_000, seed ^ 0x6d75).value;
    let n = level.n as f64;
    let hits: u64 = batched(seed, samples, DEFAULT_BATCH, |rng, count, _| {
        (0..count).filter(|_| (sample_sum(level, rng, false).0 - n * mu).abs() > zeta * n).count() as u64
    })
    .iter()
    .sum();
    Ok(EstimateResult::from_hits(hits, samples, "naive"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub n: u64,
    pub a: f64,
    pub b: f64,
    /// Empirical `P(a n <= W^(n) < b n)`.
    pub empirical: f64,
    pub std_error: f64,
    /// The same probability from the scheme's exact law.
    pub exact: f64,
    /// `n^-alpha ∫_a^b h`.
    pub predicted: f64,
    pub ratio: f64,
    pub ratio_std_error: f64,
}

/// Compares the window probability of `W^(n)` with its `h`-prediction.
pub fn tail_check(spec: &SchemeSpec, n: u64, a: f64, b: f64, samples: u64, seed: u64) -> Result<TailCheck> {
    if !(0.0 < a && a < b && b <= 1.0) {
        return Err(invalid(format!("window needs 0 < a < b <= 1, got [{a}, {b})")));
    }
    let h = spec.density()?;
    let alpha = spec.alpha()?;
    let level = spec.level(n)?;
    let nf = n as f64;
    let (lo, hi) = (a * nf, b * nf);
    let hits: u64 = batched(seed, samples, DEFAULT_BATCH, |rng, count, _| {
        (0..count)
            .filter(|_| {
                let w = level.sample(rng);
                w >= lo && w < hi
            })
            .count() as u64
    })
    .iter()
    .sum();
    let empirical = hits as f64 / samples as f64;
    let std_error = binomial_se(empirical, samples);
    let exact = level.survival_ge(lo) - level.survival_ge(hi);
    let predicted = nf.powf(-alpha) * (h.tail_mass(a) - h.tail_mass(b));
    Ok(TailCheck {
        n,
        a,
        b,
        empirical,
        std_error,
        exact,
        predicted,
        ratio: empirical / predicted,
        ratio_std_error: std_error / predicted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchKind {
    /// One `W^(n)` per replica.
    Draw,
    /// One `S_n` per replica.
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub spec: SchemeSpec,
    pub n: u64,
    pub seed: u64,
    pub kind: BatchKind,
    pub values: Vec<f64>,
}

impl SampleBatch {
    pub fn generate(spec: &SchemeSpec, n: u64, replicas: u64, seed: u64, kind: BatchKind) -> Result<Self> {
        let level = spec.level(n)?;
        let values = batched(seed, replicas, DEFAULT_BATCH, |rng, count, _| {
            (0..count)
                .map(|_| match kind {
                    BatchKind::Draw => level.sample(rng),
                    BatchKind::Sum => sample_sum(&level, rng, false).0,
                })
                .collect::<Vec<_>>()
        })
        .concat();
        Ok(Self { spec: spec.clone(), n, seed, kind, values })
    }

    /// Writes `replica,value` rows to `path` and the header record to `path.json`.
    pub fn write_csv(&self, path: &Path) -> Result<PathBuf> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "replica,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i},{v}")?;
        }
        out.flush()?;
        let header = serde_json::json!({ "spec": self.spec, "n": self.n, "seed": self.seed, "kind": self.kind, "replicas": self.values.len() });
        let side = sidecar_path(path);
        std::fs::write(&side, serde_json::to_string_pretty(&header)? + "\n")?;
        Ok(side)
    }
}

/// `out.csv` -> `out.csv.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_and_deterministic_sums() {
        let zero = SchemeSpec::discrete_grid(vec![1.0, 0.0, 0.0]).unwrap().level(7).unwrap();
        let half = SchemeSpec::discrete_grid(vec![0.0, 1.0, 0.0]).unwrap().level(8).unwrap();
        let mut rng = stream(0, 0);
        assert_eq!(sample_sum(&zero, &mut rng, false).0, 0.0);
        assert_eq!(sample_sum(&half, &mut rng, false).0, 32.0);
        let (s, v) = sample_sum(&half, &mut rng, true);
        assert_eq!(v.unwrap().iter().sum::<f64>(), s);
    }

    #[test]
    fn two_step_grid_sum_probability() {
        // P(S_2 = 2) = 5/16 for pmf {1/2, 1/4, 1/4} on {0, 1, 2}
        let lv = SchemeSpec::discrete_grid(vec![0.5, 0.25, 0.25]).unwrap().level(2).unwrap();
        let samples = 400_000u64;
        let mut rng = stream(9, 0);
        let hits = (0..samples).filter(|_| sample_sum(&lv, &mut rng, false).0 == 2.0).count();
        let p = hits as f64 / samples as f64;
        assert!((p - 5.0 / 16.0).abs() < 4.0 * binomial_se(5.0 / 16.0, samples));
    }

    #[test]
    fn pareto_draw_is_capped() {
        let lv = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().level(10).unwrap();
        // s small enough that the uncapped W is 3n
        let s = (30.0f64 / 1.0).powf(-1.5);
        assert_eq!(lv.quantile(s), 10.0);
    }

    #[test]
    fn means() {
        let g = SchemeSpec::discrete_grid(vec![0.5, 0.25, 0.25]).unwrap().level(2).unwrap();
        assert_relative_eq!(mean_mu_n(&g, 0, 0).value, 0.75);
        let p = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().level(400).unwrap();
        assert_relative_eq!(mean_mu_n(&p, 0, 0).value, 3.0 - 2.0 / 20.0, max_relative = 1e-13);
        let mc = mean_mu_n(&p, 0, 0);
        assert_eq!(mc.method, "closed_form");
        // smooth: quadrature against Monte Carlo
        let s = SchemeSpec::smooth_cutoff(1.0, 1.6).unwrap().level(50).unwrap();
        let exact = mean_mu_n(&s, 0, 0).value;
        let mut rng = stream(4, 0);
        let draws: Vec<f64> = (0..2_000_000).map(|_| s.sample(&mut rng)).collect();
        let (m, se) = mean_se(&draws);
        assert!((m - exact).abs() < 4.0 * se, "{m} vs {exact}");
        // lattice: histogram sum against the direct lattice sum
        let l = SchemeSpec::lattice_ball(2, 3.0).unwrap().level(121).unwrap();
        assert_relative_eq!(mean_mu_n(&l, 0, 0).value, crate::torus::lattice_mean(2, 5, 3.0), max_relative = 1e-12);
    }

    #[test]
    fn lln_trivial_cases() {
        let lv = SchemeSpec::discrete_grid(vec![0.0, 1.0, 0.0]).unwrap().level(16).unwrap();
        assert_eq!(lln_deviation(&lv, 0.01, 1000, 1).unwrap().prob, 0.0);
        assert!(lln_deviation(&lv, 0.01, 10, 1).is_err());
    }

    #[test]
    fn tail_window_of_pareto() {
        let spec = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap();
        let t = tail_check(&spec, 10_000, 0.5, 1.0, 1_000_000, 5).unwrap();
        // the window [n/2, n) excludes the atom at n, so the prediction is exact
        assert_relative_eq!(t.exact, t.predicted, max_relative = 1e-10);
        assert!((t.empirical - t.exact).abs() < 4.0 * t.std_error + 1e-12);
    }

    #[test]
    fn batch_reproducible_and_exported() {
        let spec = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap();
        let a = SampleBatch::generate(&spec, 64, 5000, 3, BatchKind::Sum).unwrap();
        let b = SampleBatch::generate(&spec, 64, 5000, 3, BatchKind::Sum).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|v| (0.0..=64.0 * 64.0).contains(v)));
        let dir = tempfile::tempdir().unwrap();
        let side = a.write_csv(&dir.path().join("b.csv")).unwrap();
        let header: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(header["n"], 64);
        assert_eq!(header["spec"]["shape"], "truncated_pareto");
    }

    #[test]
    fn h_examples() {
        let spec = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap();
        assert_relative_eq!(h_eval(&spec, 0.5).unwrap(), 8.485281374238571, max_relative = 1e-12);
        assert!(h_eval(&spec, 1.0).is_err());
        assert!(h_eval(&SchemeSpec::discrete_grid(vec![0.5, 0.5]).unwrap(), 0.5).is_err());
    }
}
