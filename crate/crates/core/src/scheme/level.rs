//! A scheme compiled for one `n`.
//!
//! Every sampler is a deterministic function of a survival coordinate
//! `s` in `[0, 1]` with `{W > t} = {s < P(W > t)}`, so conditioning on
//! `W > t` or `W <= t` only restricts the range of `s`.

use rand::Rng;

use super::{SchemeSpec, Shape};
use crate::error::{invalid, Result};
use crate::rng::open_unit;
use crate::torus;

/// Lattice histograms are built up to this many torus points.
const HISTOGRAM_LIMIT: u64 = 200_000_000;

#[derive(Clone, Debug)]
pub struct GridLevel {
    /// `values[i] = i * n / m`.
    pub values: Vec<f64>,
    pub pmf: Vec<f64>,
    /// `survival[i] = P(index > i)`.
    survival: Vec<f64>,
    pub step: f64,
}

impl GridLevel {
    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    /// Index drawn from survival coordinate `s`.
    #[inline]
    pub fn index(&self, s: f64) -> usize {
        self.survival.partition_point(|&v| v > s)
    }

    /// Smallest index whose value exceeds `t`.
    pub fn first_above(&self, t: f64) -> usize {
        self.values.partition_point(|&v| v <= t)
    }

    /// Smallest index whose value is at least `t`.
    pub fn first_at_least(&self, t: f64) -> usize {
        self.values.partition_point(|&v| v < t)
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Pareto { x0: f64, alpha: f64 },
    Smooth { x0: f64, alpha: f64 },
    Lattice { d: u32, half: u64, beta: f64, cumulative: Option<Vec<u64>> },
    Grid(GridLevel),
}

#[derive(Clone, Debug)]
pub struct Level {
    pub n: u64,
    nf: f64,
    alpha: Option<f64>,
    kind: Kind,
}

impl Level {
    pub fn new(spec: &SchemeSpec, n: u64) -> Result<Self> {
        spec.validate()?;
        if n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        let nf = n as f64;
        let kind = match &spec.shape {
            Shape::TruncatedPareto { c, alpha } => Kind::Pareto { x0: (c / alpha).powf(1.0 / alpha), alpha: *alpha },
            Shape::SmoothCutoff { c, alpha } => Kind::Smooth { x0: c.powf(1.0 / alpha), alpha: *alpha },
            Shape::LatticeBall { d, beta } => {
                let half = torus::half_width_for(*d, n)?;
                let cumulative = (*d >= 2 && n <= HISTOGRAM_LIMIT).then(|| crate::torus::norm_histogram(*d, half));
                Kind::Lattice { d: *d, half, beta: *beta, cumulative }
            }
            Shape::DiscreteGrid { pmf, .. } => {
                let m = pmf.len() - 1;
                let step = nf / m as f64;
                let values = (0..=m).map(|i| i as f64 * step).collect();
                let mut survival = vec![0.0; m + 1];
                let mut acc = 0.0;
                for i in (0..m).rev() {
                    acc += pmf[i + 1];
                    survival[i] = acc.min(1.0);
                }
                Kind::Grid(GridLevel { values, pmf: pmf.clone(), survival, step })
            }
        };
        Ok(Self { n, nf, alpha: spec.alpha().ok(), kind })
    }

    /// Tail index of the scheme, if it has one.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn grid(&self) -> Option<&GridLevel> {
        match &self.kind {
            Kind::Grid(g) => Some(g),
            _ => None,
        }
    }

    /// `W^(n)` as a function of the survival coordinate.
    #[inline]
    pub fn quantile(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Pareto { x0, alpha } => (x0 * s.powf(-1.0 / alpha)).min(self.nf),
            Kind::Smooth { x0, alpha } => {
                let w = x0 * s.powf(-1.0 / alpha);
                (-self.nf * (-w / self.nf).exp_m1()).min(self.nf)
            }
            Kind::Lattice { d, half, beta, cumulative } => {
                lattice_count(*d, *half, self.n, cumulative.as_deref(), s.powf(-1.0 / beta)) as f64
            }
            Kind::Grid(g) => g.values[g.index(s)],
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open_unit(rng))
    }

    /// `P(W^(n) > t)`.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match &self.kind {
            Kind::Pareto { x0, alpha } => {
                if t >= self.nf {
                    0.0
                } else if t < *x0 {
                    1.0
                } else {
                    (x0 / t).powf(*alpha)
                }
            }
            Kind::Smooth { x0, alpha } => {
                if t >= self.nf {
                    return 0.0;
                }
                let w = -self.nf * (-t / self.nf).ln_1p();
                if w < *x0 {
                    1.0
                } else {
                    (x0 / w).powf(*alpha)
                }
            }
            Kind::Lattice { d, half, beta, cumulative } => {
                let need = t.floor() as u64 + 1;
                if need > self.n - 1 {
                    return 0.0;
                }
                let q = match cumulative {
                    Some(cum) => cum.partition_point(|&c| c < need) as f64,
                    None if *d == 1 => need.div_ceil(2).pow(2) as f64,
                    None => {
                        // smallest squared radius holding `need` points, by bisection on ball_point_count
                        let (mut lo, mut hi) = (0u64, *d as u64 * half * half);
                        while lo < hi {
                            let mid = (lo + hi) / 2;
                            if torus::ball_point_count(*d, *half, (mid as f64 + 0.5).sqrt()) >= need {
                                hi = mid;
                            } else {
                                lo = mid + 1;
                            }
                        }
                        lo as f64
                    }
                };
                q.powf(-beta / 2.0).min(1.0)
            }
            Kind::Grid(g) => {
                let i = g.first_above(t);
                if i == 0 {
                    1.0
                } else {
                    g.survival[i - 1]
                }
            }
        }
    }

    /// `P(W^(n) >= t)`.
    pub fn survival_ge(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Pareto { x0, alpha } => {
                if t > self.nf {
                    0.0
                } else if t <= *x0 {
                    1.0
                } else {
                    (x0 / t).powf(*alpha)
                }
            }
            Kind::Smooth { .. } => self.survival(t),
            Kind::Lattice { .. } => self.survival(t.ceil() - 1.0),
            Kind::Grid(g) => {
                let i = g.first_at_least(t);
                if i == 0 {
                    1.0
                } else {
                    g.survival[i - 1]
                }
            }
        }
    }

    /// Draw conditioned on `W^(n) > t`; `None` if that event is null.
    pub fn sample_above<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Option<f64> {
        let p = self.survival(t);
        (p > 0.0).then(|| self.quantile(p * rng.random::<f64>()))
    }

    /// Draw conditioned on `W^(n) >= t`; `None` if that event is null.
    pub fn sample_at_least<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Option<f64> {
        let p = self.survival_ge(t);
        (p > 0.0).then(|| self.quantile(p * rng.random::<f64>()))
    }

    /// Draw conditioned on `W^(n) <= t`; `None` if that event is null.
    pub fn sample_at_most<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Option<f64> {
        let p = self.survival(t);
        (p < 1.0).then(|| self.quantile(p + (1.0 - p) * open_unit(rng)))
    }

    /// Exact `E W^(n)` when it is cheap to compute.
    pub fn exact_mean(&self) -> Option<(f64, &'static str)> {
        match &self.kind {
            Kind::Pareto { x0, alpha } => {
                if self.nf <= *x0 {
                    return Some((self.nf, "closed_form"));
                }
                let tail = x0.powf(*alpha) * self.nf.powf(1.0 - alpha) / (alpha - 1.0);
                Some((x0 * alpha / (alpha - 1.0) - tail, "closed_form"))
            }
            Kind::Smooth { x0, .. } => {
                // E W^(n) = ∫_0^n P(W^(n) > y) dy, flat at 1 below the image of x0
                let y0 = (-self.nf * (-x0 / self.nf).exp_m1()).min(self.nf);
                let tol = 1e-12 * self.nf;
                let rest = crate::quad::integrate_singular(|y| self.survival(y), y0, self.nf, tol, crate::quad::Singular::RIGHT);
                Some((y0 + rest.value, "quadrature"))
            }
            Kind::Lattice { d, half, beta, cumulative } => {
                if let Some(cum) = cumulative {
                    let mut total = 0.0;
                    for q in 1..cum.len() {
                        let count = cum[q] - cum[q - 1];
                        if count > 0 {
                            total += count as f64 * (q as f64).powf(-beta / 2.0).min(1.0);
                        }
                    }
                    Some((total, "lattice_sum"))
                } else if *d == 1 {
                    Some((2.0 * (1..=*half).map(|j| (j as f64).powf(-beta)).sum::<f64>(), "lattice_sum"))
                } else {
                    None
                }
            }
            Kind::Grid(g) => Some((g.values.iter().zip(&g.pmf).map(|(v, p)| v * p).sum(), "closed_form")),
        }
    }

    /// `(d, N, beta)` for lattice levels.
    pub fn lattice_params(&self) -> Option<(u32, u64, f64)> {
        match &self.kind {
            Kind::Lattice { d, half, beta, .. } => Some((*d, *half, *beta)),
            _ => None,
        }
    }
}


#[inline]
fn lattice_count(d: u32, half: u64, n: u64, cumulative: Option<&[u64]>, radius: f64) -> u64 {
    let r2 = radius * radius;
    match cumulative {
        Some(cum) => {
            if !(r2 <= (cum.len() - 1) as f64) {
                return n - 1;
            }
            let q = r2.ceil() as usize;
            if q == 0 {
                0
            } else {
                cum[q - 1]
            }
        }
        None if d == 1 => {
            if !radius.is_finite() {
                return n - 1;
            }
            2 * ((radius.ceil() as u64).saturating_sub(1)).min(half)
        }
        None => torus::ball_point_count(d, half, radius),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn levels() -> Vec<Level> {
        vec![
            SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().level(64).unwrap(),
            SchemeSpec::smooth_cutoff(1.0, 1.3).unwrap().level(64).unwrap(),
            SchemeSpec::lattice_ball(1, 1.5).unwrap().level(41).unwrap(),
            SchemeSpec::lattice_ball(2, 3.0).unwrap().level(81).unwrap(),
            SchemeSpec::discrete_grid(vec![0.1, 0.2, 0.3, 0.4]).unwrap().level(30).unwrap(),
        ]
    }

    #[test]
    fn survival_coordinate_identity() {
        let mut rng = stream(1, 0);
        for lv in levels() {
            for _ in 0..20_000 {
                let s: f64 = rng.random();
                let t = rng.random::<f64>() * 1.1 * lv.n as f64;
                let w = lv.quantile(s);
                assert!((0.0..=lv.n as f64).contains(&w));
                assert_eq!(w > t, s < lv.survival(t), "t={t} s={s} w={w}");
            }
        }
    }

    #[test]
    fn lattice_counts_agree_with_direct_count() {
        let mut rng = stream(2, 0);
        for (d, half) in [(1u32, 7u64), (2, 6), (3, 3)] {
            let n = (2 * half + 1).pow(d);
            let lv = SchemeSpec::lattice_ball(d, d as f64 + 1.0).unwrap().level(n).unwrap();
            let (_, _, beta) = lv.lattice_params().unwrap();
            for _ in 0..2000 {
                let s: f64 = rng.random();
                let direct = torus::ball_point_count(d, half, s.powf(-1.0 / beta)) as f64;
                assert_eq!(lv.quantile(s), direct);
            }
        }
    }

    #[test]
    fn lattice_survival_without_histogram() {
        // d >= 2 fallback path matches the histogram path
        let lv = SchemeSpec::lattice_ball(2, 3.0).unwrap().level(121).unwrap();
        let Kind::Lattice { d, half, beta, .. } = lv.kind.clone() else { unreachable!() };
        let bare = Level { kind: Kind::Lattice { d, half, beta, cumulative: None }, ..lv.clone() };
        for t in [0.0, 3.5, 4.0, 17.2, 60.0, 119.0, 120.0] {
            assert_eq!(lv.survival(t), bare.survival(t), "t={t}");
        }
    }

    #[test]
    fn ge_and_gt_differ_only_on_atoms() {
        let p = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().level(100).unwrap();
        assert_eq!(p.survival(100.0), 0.0);
        assert!((p.survival_ge(100.0) - 1e-3).abs() < 1e-15);
        let g = SchemeSpec::discrete_grid(vec![0.5, 0.25, 0.25]).unwrap().level(2).unwrap();
        assert_eq!(g.survival_ge(1.0), 0.5);
        assert_eq!(g.survival(1.0), 0.25);
        assert_eq!(g.survival(-0.5), 1.0);
        assert_eq!(g.survival_ge(0.0), 1.0);
    }

    #[test]
    fn conditional_draws_respect_threshold() {
        let mut rng = stream(3, 0);
        for lv in levels() {
            let t = 0.3 * lv.n as f64;
            for _ in 0..5000 {
                if let Some(w) = lv.sample_above(t, &mut rng) {
                    assert!(w > t);
                }
                if let Some(w) = lv.sample_at_most(t, &mut rng) {
                    assert!(w <= t);
                }
                if let Some(w) = lv.sample_at_least(t, &mut rng) {
                    assert!(w >= t);
                }
            }
        }
    }

    #[test]
    fn lattice_rejects_bad_n() {
        assert!(SchemeSpec::lattice_ball(2, 3.0).unwrap().level(100).is_err());
    }
}
