//! Ball/cube intersection volumes.
//!
//! `g(r)` is the volume of the ball of radius `sqrt(d) r / 2` intersected with
//! the unit cube `[-1/2, 1/2]^d`; `g(r) = 1` for `r >= 1`. Closed forms are
//! used for `d <= 2`; higher dimensions integrate `(d-1)`-dimensional cross
//! sections and are tabulated once per dimension.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{domain, invalid, Error, Result};
use crate::quad;

pub const DEFAULT_GRID: usize = 4096;

/// Environment variable naming a directory for persisted geometry tables.
pub const CACHE_DIR_ENV: &str = "BIGJUMPS_GEOMETRY_CACHE";

/// Area of the disk of radius `t` clipped to the unit square.
fn disk_in_square(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= 0.5 {
        PI * t * t
    } else if t < std::f64::consts::FRAC_1_SQRT_2 {
        let segment = t * t * (0.5 / t).acos() - 0.5 * (t * t - 0.25).sqrt();
        PI * t * t - 4.0 * segment
    } else {
        1.0
    }
}

/// Perimeter of the circle of radius `t` inside the unit square.
fn arc_in_square(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= 0.5 {
        2.0 * PI * t
    } else if t < std::f64::consts::FRAC_1_SQRT_2 {
        t * (2.0 * PI - 8.0 * (0.5 / t).acos())
    } else {
        0.0
    }
}

/// Volume of the `dim`-ball of radius `t` clipped to the unit `dim`-cube.
fn ball_in_cube(dim: u32, t: f64) -> f64 {
    match dim {
        0 => 1.0,
        1 => (2.0 * t).clamp(0.0, 1.0),
        2 => disk_in_square(t),
        _ => {
            let r = 2.0 * t / (dim as f64).sqrt();
            if r >= 1.0 {
                1.0
            } else {
                table(dim).eval(r)
            }
        }
    }
}

/// Cross-section integral defining `g` in dimension `d >= 3`.
fn g_by_sections(d: u32, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    let s = 0.5 * (d as f64).sqrt() * r;
    let zmax = s.min(0.5);
    let res = quad::integrate(
        |z: f64| ball_in_cube(d - 1, (s * s - z * z).max(0.0).sqrt()),
        0.0,
        zmax,
        1e-13,
    );
    (2.0 * res.value).clamp(0.0, 1.0)
}

/// Tabulated `g` on a uniform grid of `[0, 1]` with monotone cubic interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryTable {
    pub d: u32,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    slopes: Vec<f64>,
}

impl GeometryTable {
    pub fn build(d: u32, grid: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be >= 1"));
        }
        if grid < 3 {
            return Err(invalid("geometry grid needs at least 3 points"));
        }
        let r: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
        let g: Vec<f64> = r
            .iter()
            .map(|&x| match d {
                1 => x.min(1.0),
                2 => disk_in_square(x * std::f64::consts::FRAC_1_SQRT_2),
                _ => g_by_sections(d, x),
            })
            .collect();
        Self::from_samples(d, r, g)
    }

    fn from_samples(d: u32, r: Vec<f64>, mut g: Vec<f64>) -> Result<Self> {
        if r.len() != g.len() || r.len() < 3 {
            return Err(invalid("geometry table needs matching columns of length >= 3"));
        }
        // quadrature noise must not break monotonicity
        for i in 1..g.len() {
            if g[i] < g[i - 1] {
                g[i] = g[i - 1];
            }
        }
        let slopes = pchip_slopes(&r, &g);
        Ok(Self { d, r, g, slopes })
    }

    fn locate(&self, x: f64) -> usize {
        let h = self.r[1] - self.r[0];
        ((x / h) as usize).min(self.r.len() - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let i = self.locate(x);
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        let (y0, y1, m0, m1) = (self.g[i], self.g[i + 1], self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let i = self.locate(x);
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        let (y0, y1, m0, m1) = (self.g[i], self.g[i + 1], self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0 + (6.0 * t - 6.0 * t2) * y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1
    }

    pub fn file_name(d: u32, grid: usize) -> String {
        format!("geometry_d{d}_n{grid}.csv")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path)?;
        writeln!(out, "r,g")?;
        for (r, g) in self.r.iter().zip(&self.g) {
            writeln!(out, "{r:.17e},{g:.17e}")?;
        }
        Ok(())
    }

    pub fn load_csv(d: u32, path: &Path) -> Result<Self> {
        let file = BufReader::new(fs::File::open(path)?);
        let mut r = Vec::new();
        let mut g = Vec::new();
        for (i, line) in file.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |p: Option<&str>| -> Result<f64> {
                p.and_then(|s| s.trim().parse().ok())
                    .ok_or(Error::Config { line: i + 1, msg: "expected two numbers".into() })
            };
            r.push(parse(parts.next())?);
            g.push(parse(parts.next())?);
        }
        Self::from_samples(d, r, g)
    }

    /// Loads `dir/geometry_d{d}_n{grid}.csv` if present, otherwise builds and writes it.
    pub fn load_or_build(dir: &Path, d: u32, grid: usize) -> Result<Self> {
        let path: PathBuf = dir.join(Self::file_name(d, grid));
        if path.exists() {
            let t = Self::load_csv(d, &path)?;
            if t.r.len() == grid {
                return Ok(t);
            }
        }
        let t = Self::build(d, grid)?;
        fs::create_dir_all(dir)?;
        t.save_csv(&path)?;
        Ok(t)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    m
}

fn table(d: u32) -> Arc<GeometryTable> {
    static TABLES: OnceLock<Mutex<HashMap<u32, Arc<GeometryTable>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = tables.lock().expect("geometry cache").get(&d) {
        return t.clone();
    }
    // build outside the lock: lower dimensions are requested recursively
    let built = match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) => GeometryTable::load_or_build(Path::new(&dir), d, DEFAULT_GRID),
        None => GeometryTable::build(d, DEFAULT_GRID),
    }
    .expect("geometry table for d >= 1");
    let mut guard = tables.lock().expect("geometry cache");
    guard.entry(d).or_insert_with(|| Arc::new(built)).clone()
}

/// Shared table for dimension `d` (built on first use).
pub fn geometry_table(d: u32) -> Arc<GeometryTable> {
    table(d)
}

pub fn g_eval(d: u32, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    match d {
        1 => r,
        2 => disk_in_square(r * std::f64::consts::FRAC_1_SQRT_2),
        _ => table(d).eval(r),
    }
}

pub fn g_prime(d: u32, r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        return 0.0;
    }
    match d {
        1 => 1.0,
        2 => arc_in_square(r * std::f64::consts::FRAC_1_SQRT_2) * std::f64::consts::FRAC_1_SQRT_2,
        _ => table(d).derivative(r),
    }
}

/// Inverse of `g` on `(0, 1)`: Newton steps kept inside a bisection bracket.
pub fn g_inverse(d: u32, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(domain(format!("g_inverse needs a in (0,1), got {a}")));
    }
    if d == 1 {
        return Ok(a);
    }
    let tab = (d >= 3).then(|| table(d));
    let value = |r: f64| match &tab {
        Some(t) => t.eval(r),
        None => g_eval(d, r),
    };
    let slope = |r: f64| match &tab {
        Some(t) => t.derivative(r),
        None => g_prime(d, r),
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // inscribed-ball guess
    let mut r = (a / value(0.5)).powf(1.0 / d as f64) * 0.5;
    r = r.clamp(1e-3, 1.0 - 1e-3);
    for _ in 0..200 {
        let f = value(r) - a;
        if f < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        if hi - lo <= 1e-15 || f == 0.0 {
            break;
        }
        let step = f / slope(r);
        if step.abs() < 1e-16 {
            break;
        }
        let next = r - step;
        r = if step.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn g_is_one_beyond_unit_radius() {
        for d in 1..=3 {
            for r in [1.0, 1.2, 5.0] {
                assert_eq!(g_eval(d, r), 1.0);
            }
        }
    }

    #[test]
    fn one_dimensional_interval_length() {
        assert_eq!(g_eval(1, 0.5), 0.5);
        assert_eq!(g_inverse(1, 0.3).unwrap(), 0.3);
    }

    #[test]
    fn inscribed_disk() {
        let g = g_eval(2, 1.0 / 2f64.sqrt());
        assert!((g - PI / 4.0).abs() < 1e-12, "{g}");
    }

    #[test]
    fn inscribed_ball_in_three_dimensions() {
        // radius sqrt(3) r / 2 <= 1/2 stays inside the cube
        for r in [0.2, 0.4, 1.0 / 3f64.sqrt()] {
            let s = 0.5 * 3f64.sqrt() * r;
            assert_relative_eq!(g_eval(3, r), 4.0 / 3.0 * PI * s.powi(3), max_relative = 1e-7);
        }
    }

    #[test]
    fn g_prime_matches_finite_differences() {
        for d in [2, 3] {
            for r in [0.3, 0.6, 0.75, 0.9] {
                let h = 1e-5;
                let fd = (g_eval(d, r + h) - g_eval(d, r - h)) / (2.0 * h);
                assert!((g_prime(d, r) - fd).abs() < 1e-4 * fd.max(1.0), "d={d} r={r}");
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        for d in 1..=3 {
            let tol = if d <= 2 { 1e-8 } else { 1e-5 };
            for i in 1..100 {
                let r = i as f64 / 100.0;
                let back = g_inverse(d, g_eval(d, r)).unwrap();
                assert!((back - r).abs() < tol, "d={d} r={r} back={back}");
            }
        }
        assert!(g_inverse(2, 0.0).is_err());
        assert!(g_inverse(2, 1.0).is_err());
    }

    #[test]
    fn strictly_increasing_on_unit_interval() {
        for d in 1..=3 {
            let vals: Vec<f64> = (1..1000).map(|i| g_eval(d, i as f64 / 1000.0)).collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]), "d={d}");
        }
    }

    #[test]
    fn table_persists() {
        let dir = tempfile::tempdir().unwrap();
        let t = GeometryTable::load_or_build(dir.path(), 2, 257).unwrap();
        let again = GeometryTable::load_or_build(dir.path(), 2, 257).unwrap();
        assert_eq!(t.r.len(), 257);
        for (a, b) in t.g.iter().zip(&again.g) {
            assert_eq!(a, b);
        }
        assert!((t.eval(0.5) - g_eval(2, 0.5)).abs() < 1e-7);
    }
}
