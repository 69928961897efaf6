//! One-dimensional quadrature: globally adaptive Gauss-Kronrod (7/15) with
//! optional logarithmic endpoint substitutions, and composite Gauss-Legendre
//! on uniform panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Closest distance to a singular endpoint at which the integrand is evaluated.
pub const ENDPOINT_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Which endpoints carry an (integrable) singularity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Singular {
    pub left: bool,
    pub right: bool,
}

impl Singular {
    pub const NONE: Singular = Singular { left: false, right: false };
    pub const BOTH: Singular = Singular { left: true, right: true };
    pub const RIGHT: Singular = Singular { left: false, right: true };
    pub const LEFT: Singular = Singular { left: true, right: false };
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * half;
    let err = ((resk - resg) * half).abs();
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive G7K15 on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    integrate_limited(&f, a, b, tol, 2000)
}

fn integrate_limited<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_segments: usize) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0, converged: true };
    }
    let (value, err) = kronrod(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total_err = err;
    let mut evaluations = 15;
    while total_err > tol && heap.len() < max_segments {
        let seg = heap.pop().expect("non-empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = kronrod(f, seg.a, mid);
        let (v2, e2) = kronrod(f, mid, seg.b);
        evaluations += 30;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
    }
    // re-sum to shed accumulated cancellation
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let abs_error: f64 = heap.iter().map(|s| s.err).sum();
    QuadResult { value, abs_error, evaluations, converged: abs_error <= tol }
}

/// Adaptive quadrature with `u = -log(distance to endpoint)` substitutions at
/// the flagged endpoints. The integrand is never evaluated closer than
/// [`ENDPOINT_CLAMP`] to a flagged endpoint; the omitted sliver is not
/// estimated, so callers owning a closed-form tail mass add it themselves.
pub fn integrate_singular<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, singular: Singular) -> QuadResult {
    if !(b > a) {
        return QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0, converged: true };
    }
    if singular == Singular::NONE {
        return integrate(f, a, b, tol);
    }
    let (lo, hi) = match (singular.left, singular.right) {
        (true, true) => (0.5 * (a + b), 0.5 * (a + b)),
        (true, false) => (a + 0.5 * (b - a), b),
        (false, true) => (a, a + 0.5 * (b - a)),
        (false, false) => unreachable!(),
    };
    let parts = [singular.left, singular.right].iter().filter(|s| **s).count() as f64;
    let piece_tol = tol / (parts + 1.0);
    let mut out = QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0, converged: true };
    let mut add = |r: QuadResult| {
        out.value += r.value;
        out.abs_error += r.abs_error;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
    };
    if singular.left {
        let width = lo - a;
        if width > ENDPOINT_CLAMP {
            let umax = (width / ENDPOINT_CLAMP).ln();
            add(integrate_limited(
                &|u: f64| {
                    let t = width * (-u).exp();
                    f(a + t) * t
                },
                0.0,
                umax,
                piece_tol,
                2000,
            ));
        }
    }
    if hi > lo {
        add(integrate_limited(&f, lo, hi, piece_tol, 2000));
    }
    if singular.right {
        let width = b - hi;
        if width > ENDPOINT_CLAMP {
            let umax = (width / ENDPOINT_CLAMP).ln();
            add(integrate_limited(
                &|u: f64| {
                    let t = width * (-u).exp();
                    f(b - t) * t
                },
                0.0,
                umax,
                piece_tol,
                2000,
            ));
        }
    }
    out
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Points per panel of the composite rule.
pub const GL_POINTS: usize = 10;

fn gl10() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre_rule(GL_POINTS))
}

/// Composite 10-point Gauss-Legendre over `panels` equal panels.
pub fn composite_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    if !(b > a) || panels == 0 {
        return 0.0;
    }
    let (nodes, weights) = gl10();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let c = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            s += w * f(c + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}
