//! Shape densities `h` on `(0, 1)` together with their tail masses
//! `T(x) = ∫_x^1 h`, which the quadrature and importance samplers work in.

use std::path::Path;
use std::sync::Arc;

use crate::error::{domain, invalid, Error, Result};
use crate::quad::{integrate_singular, Singular};
use crate::torus;

pub trait ShapeDensity: Send + Sync {
    /// `h(x)` for `x` in `(0, 1)`; zero outside.
    fn eval(&self, x: f64) -> f64;

    /// `∫_x^1 h`; may be infinite as `x -> 0`.
    fn tail_mass(&self, x: f64) -> f64;

    /// Solves `tail_mass(x) = m` for `x` in `(0, 1)`.
    fn tail_point(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.tail_mass(mid) > m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Limit of `n^alpha P(W^(n) = n)`, the point mass the cut-off leaves at 1.
    fn atom(&self) -> f64 {
        0.0
    }

    fn describe(&self) -> String;
}

pub type Density = Arc<dyn ShapeDensity>;

/// `h ≡ level`.
#[derive(Clone, Debug)]
pub struct Uniform {
    pub level: f64,
}

impl ShapeDensity for Uniform {
    fn eval(&self, x: f64) -> f64 {
        if x > 0.0 && x < 1.0 {
            self.level
        } else {
            0.0
        }
    }
    fn tail_mass(&self, x: f64) -> f64 {
        self.level * (1.0 - x.clamp(0.0, 1.0))
    }
    fn tail_point(&self, m: f64) -> f64 {
        (1.0 - m / self.level).clamp(0.0, 1.0)
    }
    fn describe(&self) -> String {
        format!("uniform({})", self.level)
    }
}

/// `h(x) = c x^(-alpha-1)`.
#[derive(Clone, Debug)]
pub struct ParetoShape {
    pub c: f64,
    pub alpha: f64,
}

impl ShapeDensity for ParetoShape {
    fn eval(&self, x: f64) -> f64 {
        if x > 0.0 && x < 1.0 {
            self.c * x.powf(-self.alpha - 1.0)
        } else {
            0.0
        }
    }
    fn tail_mass(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 0.0;
        }
        self.c / self.alpha * (x.powf(-self.alpha) - 1.0)
    }
    fn tail_point(&self, m: f64) -> f64 {
        (1.0 + self.alpha * m / self.c).powf(-1.0 / self.alpha)
    }
    fn atom(&self) -> f64 {
        self.c / self.alpha
    }
    fn describe(&self) -> String {
        format!("pareto(c={}, alpha={})", self.c, self.alpha)
    }
}

/// `h(x) = c alpha (1-x)^-1 L^(-alpha-1)` with `L = -ln(1-x)`.
#[derive(Clone, Debug)]
pub struct SmoothShape {
    pub c: f64,
    pub alpha: f64,
}

impl ShapeDensity for SmoothShape {
    fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        let l = -(-x).ln_1p();
        self.c * self.alpha / (1.0 - x) * l.powf(-self.alpha - 1.0)
    }
    fn tail_mass(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 0.0;
        }
        self.c * (-(-x).ln_1p()).powf(-self.alpha)
    }
    fn tail_point(&self, m: f64) -> f64 {
        let l = (m / self.c).powf(-1.0 / self.alpha);
        -(-l).exp_m1()
    }
    fn describe(&self) -> String {
        format!("smooth(c={}, alpha={})", self.c, self.alpha)
    }
}

/// Out-degree shape of the lattice-torus graph.
#[derive(Clone, Debug)]
pub struct LatticeShape {
    pub d: u32,
    pub beta: f64,
}

impl LatticeShape {
    fn constant(&self) -> f64 {
        torus::lattice_tail_constant(self.d, self.beta)
    }
}

impl ShapeDensity for LatticeShape {
    fn eval(&self, x: f64) -> f64 {
        torus::h_lattice(self.d, self.beta, x).unwrap_or(0.0)
    }
    fn tail_mass(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 0.0;
        }
        if x <= 0.0 {
            return f64::INFINITY;
        }
        let r = torus::g_inverse(self.d, x).expect("x in (0,1)");
        self.constant() * (r.powf(-self.beta) - 1.0)
    }
    fn tail_point(&self, m: f64) -> f64 {
        if m <= 0.0 {
            return 1.0;
        }
        torus::g_eval(self.d, (1.0 + m / self.constant()).powf(-1.0 / self.beta))
    }
    fn atom(&self) -> f64 {
        self.constant()
    }
    fn describe(&self) -> String {
        format!("lattice(d={}, beta={})", self.d, self.beta)
    }
}

/// Piecewise-linear `h` through user points, held flat beyond the first and last.
#[derive(Clone, Debug)]
pub struct Tabulated {
    xs: Vec<f64>,
    hs: Vec<f64>,
    /// `tail[i] = ∫_{xs[i]}^1 h`.
    tail: Vec<f64>,
}

impl Tabulated {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("tabulated h needs at least two points"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(invalid("tabulated x values must be strictly increasing"));
            }
        }
        if points.iter().any(|&(x, h)| !(x > 0.0 && x < 1.0) || !(h >= 0.0) || !h.is_finite()) {
            return Err(invalid("tabulated points need x in (0,1) and finite h >= 0"));
        }
        let mut xs = vec![0.0];
        let mut hs = vec![points[0].1];
        for &(x, h) in &points {
            xs.push(x);
            hs.push(h);
        }
        xs.push(1.0);
        hs.push(points[points.len() - 1].1);
        let mut tail = vec![0.0; xs.len()];
        for i in (0..xs.len() - 1).rev() {
            tail[i] = tail[i + 1] + 0.5 * (hs[i] + hs[i + 1]) * (xs[i + 1] - xs[i]);
        }
        Ok(Self { xs, hs, tail })
    }

    /// Reads `x h` pairs (comma or whitespace separated, `#` comments).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
            match parsed.as_deref() {
                Some([x, h]) => points.push((*x, *h)),
                _ if points.is_empty() && i == 0 => continue, // header
                _ => return Err(Error::Config { line: i + 1, msg: format!("expected 'x h', got '{raw}'") }),
            }
        }
        Self::new(points)
    }

    fn segment(&self, x: f64) -> usize {
        self.xs.partition_point(|&v| v <= x).clamp(1, self.xs.len() - 1) - 1
    }

    fn interp(&self, i: usize, x: f64) -> f64 {
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.hs[i] + t * (self.hs[i + 1] - self.hs[i])
    }
}

impl ShapeDensity for Tabulated {
    fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        self.interp(self.segment(x), x)
    }
    fn tail_mass(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let i = self.segment(x);
        self.tail[i + 1] + 0.5 * (self.interp(i, x) + self.hs[i + 1]) * (self.xs[i + 1] - x)
    }
    fn describe(&self) -> String {
        format!("tabulated({} points)", self.xs.len() - 2)
    }
}

/// Arbitrary `h` given as a closure; tail masses by quadrature.
pub struct FnDensity<F> {
    pub f: F,
    pub label: String,
}

impl<F: Fn(f64) -> f64 + Send + Sync> ShapeDensity for FnDensity<F> {
    fn eval(&self, x: f64) -> f64 {
        if x > 0.0 && x < 1.0 {
            (self.f)(x)
        } else {
            0.0
        }
    }
    fn tail_mass(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 0.0;
        }
        integrate_singular(|t| self.eval(t), x.max(0.0), 1.0, 1e-12, Singular::BOTH).value
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}

pub fn check_unit_interval(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("h is defined on (0,1), got x = {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all() -> Vec<Box<dyn ShapeDensity>> {
        vec![
            Box::new(Uniform { level: 1.0 }),
            Box::new(ParetoShape { c: 1.5, alpha: 1.5 }),
            Box::new(SmoothShape { c: 1.0, alpha: 1.3 }),
            Box::new(LatticeShape { d: 1, beta: 1.5 }),
            Box::new(LatticeShape { d: 2, beta: 3.0 }),
            Box::new(Tabulated::new(vec![(0.2, 3.0), (0.5, 1.0), (0.9, 2.0)]).unwrap()),
        ]
    }

    #[test]
    fn tail_mass_is_integral_of_eval() {
        for h in all() {
            for a in [0.2, 0.45, 0.7] {
                let b = a + 0.2;
                let direct = integrate_singular(|t| h.eval(t), a, b, 1e-11, Singular::NONE).value;
                let diff = h.tail_mass(a) - h.tail_mass(b);
                assert_relative_eq!(diff, direct, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn tail_point_inverts_tail_mass() {
        for h in all() {
            for x in [0.05, 0.3, 0.8, 0.99] {
                let m = h.tail_mass(x);
                assert!((h.tail_point(m) - x).abs() < 1e-9, "{} at {x}", h.describe());
            }
        }
    }

    #[test]
    fn closed_forms() {
        let p = ParetoShape { c: 1.5, alpha: 1.5 };
        assert_relative_eq!(p.eval(0.5), 1.5 * 0.5f64.powf(-2.5), max_relative = 1e-14);
        assert_relative_eq!(p.eval(0.5), 8.48528137423857, max_relative = 1e-12);
        let s = SmoothShape { c: 0.7, alpha: 1.4 };
        let x = 1.0 - (-1.0f64).exp();
        assert_relative_eq!(s.eval(x), 0.7 * 1.4 * std::f64::consts::E, max_relative = 1e-12);
        assert_eq!(p.atom(), 1.0);
    }

    #[test]
    fn generic_closure_density() {
        let f = FnDensity { f: |x: f64| 2.0 * x, label: "2x".into() };
        assert_relative_eq!(f.tail_mass(0.5), 0.75, max_relative = 1e-10);
        assert_relative_eq!(f.tail_point(0.75), 0.5, max_relative = 1e-8);
    }

    #[test]
    fn tabulated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.txt");
        std::fs::write(&path, "x,h\n# comment\n0.25, 1\n0.75 3\n").unwrap();
        let t = Tabulated::load(&path).unwrap();
        assert_relative_eq!(t.eval(0.5), 2.0);
        assert_relative_eq!(t.eval(0.1), 1.0);
        assert_relative_eq!(t.tail_mass(0.0), 0.25 + 1.0 + 0.75, max_relative = 1e-14);
        std::fs::write(&path, "0.25 1\nbad\n").unwrap();
        assert!(matches!(Tabulated::load(&path), Err(Error::Config { line: 2, .. })));
    }
}
