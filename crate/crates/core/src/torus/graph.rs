//! Whole-graph degree computation.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ball_point_count, for_each_ball_offset, sample_radius, TorusConfig};
use crate::error::{invalid, Error, Result};
use crate::rng::stream;

/// Resource caps for [`generate_graph_planted`].
#[derive(Clone, Copy, Debug)]
pub struct GraphLimits {
    pub max_vertices: u64,
    /// Upper bound on the total number of ball points enumerated.
    pub max_visits: u64,
}

impl Default for GraphLimits {
    fn default() -> Self {
        Self { max_vertices: 50_000_000, max_visits: 100_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub out_degrees: Vec<u64>,
    pub in_degrees: Vec<u64>,
    pub edge_count: u64,
    /// `edge_count / n`.
    pub rho_n: f64,
}

impl DegreeSummary {
    pub fn n(&self) -> usize {
        self.out_degrees.len()
    }

    /// Writes `vertex_index,out_degree,in_degree` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "vertex_index,out_degree,in_degree")?;
        for (i, (o, d)) in self.out_degrees.iter().zip(&self.in_degrees).enumerate() {
            writeln!(out, "{i},{o},{d}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut out_degrees = Vec::new();
        let mut in_degrees = Vec::new();
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Config { line: line_no + 1, msg: format!("bad degree row '{line}'") };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 || cols[0].parse::<usize>().ok() != Some(out_degrees.len()) {
                return Err(bad());
            }
            out_degrees.push(cols[1].parse().map_err(|_| bad())?);
            in_degrees.push(cols[2].parse().map_err(|_| bad())?);
        }
        let edge_count: u64 = out_degrees.iter().sum();
        if in_degrees.iter().sum::<u64>() != edge_count {
            return Err(invalid("degree file violates edge conservation"));
        }
        let rho_n = edge_count as f64 / out_degrees.len().max(1) as f64;
        Ok(Self { out_degrees, in_degrees, edge_count, rho_n })
    }
}

/// Per-vertex radii, each drawn from its own `(seed, vertex)` stream.
pub fn graph_radii(config: &TorusConfig) -> Vec<f64> {
    (0..config.n())
        .into_par_iter()
        .map(|v| sample_radius(config.beta, &mut stream(config.seed, v)))
        .collect()
}

pub fn generate_graph(config: &TorusConfig) -> Result<DegreeSummary> {
    generate_graph_planted(config, &[], GraphLimits::default())
}

/// Like [`generate_graph`], with the radius of each listed vertex overridden.
pub fn generate_graph_planted(
    config: &TorusConfig,
    planted: &[(u64, f64)],
    limits: GraphLimits,
) -> Result<DegreeSummary> {
    config.validate()?;
    let n = config.n();
    if n > limits.max_vertices {
        return Err(Error::Limit(format!("n = {n} exceeds the vertex cap {}", limits.max_vertices)));
    }
    let mut radii = graph_radii(config);
    for &(v, r) in planted {
        if v >= n || !(r > 0.0) {
            return Err(invalid(format!("bad planted radius ({v}, {r})")));
        }
        radii[v as usize] = r;
    }
    let (d, half) = (config.d, config.half_width);
    let out_degrees: Vec<u64> = radii.par_iter().map(|&r| ball_point_count(d, half, r)).collect();
    let edge_count: u64 = out_degrees.iter().sum();
    if edge_count > limits.max_visits {
        return Err(Error::Limit(format!(
            "{edge_count} ball points exceed the visit cap {}",
            limits.max_visits
        )));
    }

    let side = config.side() as i64;
    let dims = d as usize;
    let in_degrees = (0..n)
        .into_par_iter()
        .fold(
            || (vec![0u64; n as usize], vec![0i64; dims]),
            |(mut acc, mut base), v| {
                let mut rem = v as i64;
                for c in base.iter_mut() {
                    *c = rem % side;
                    rem /= side;
                }
                for_each_ball_offset(d, config.half_width, radii[v as usize], |off| {
                    let mut idx = 0i64;
                    let mut stride = 1i64;
                    for (b, o) in base.iter().zip(off) {
                        let mut c = b + o;
                        if c >= side {
                            c -= side;
                        } else if c < 0 {
                            c += side;
                        }
                        idx += c * stride;
                        stride *= side;
                    }
                    acc[idx as usize] += 1;
                });
                (acc, base)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(
            || vec![0u64; n as usize],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(DegreeSummary { rho_n: edge_count as f64 / n as f64, out_degrees, in_degrees, edge_count })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondensationStats {
    /// Sum of the `k` largest out-degrees over `n`.
    pub top_k_out_share: f64,
    /// Vertices with out-degree above `eps n`.
    pub big_out_count: u64,
    pub max_in_share: f64,
}

pub fn condensation_stats(summary: &DegreeSummary, k: usize, eps: f64) -> CondensationStats {
    let n = summary.n() as f64;
    let mut sorted = summary.out_degrees.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let top: u64 = sorted.iter().take(k).sum();
    let big = summary.out_degrees.iter().filter(|&&o| o as f64 > eps * n).count() as u64;
    let max_in = summary.in_degrees.iter().copied().max().unwrap_or(0);
    CondensationStats { top_k_out_share: top as f64 / n, big_out_count: big, max_in_share: max_in as f64 / n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conservation_and_bounds() {
        for (d, half, beta) in [(1, 20, 1.5), (2, 6, 3.0), (3, 3, 4.0)] {
            let cfg = TorusConfig::new(d, half, beta, 7).unwrap();
            let s = generate_graph(&cfg).unwrap();
            let n = cfg.n();
            assert_eq!(s.out_degrees.iter().sum::<u64>(), s.edge_count);
            assert_eq!(s.in_degrees.iter().sum::<u64>(), s.edge_count);
            assert!(s.out_degrees.iter().all(|&o| o >= 2 * d as u64 && o < n));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = TorusConfig::new(2, 5, 2.5, 3).unwrap();
        assert_eq!(generate_graph(&cfg).unwrap(), generate_graph(&cfg).unwrap());
        let other = TorusConfig { seed: 4, ..cfg.clone() };
        assert_ne!(generate_graph(&cfg).unwrap(), generate_graph(&other).unwrap());
    }

    #[test]
    fn in_degrees_match_brute_force() {
        let cfg = TorusConfig::new(2, 4, 2.2, 9).unwrap();
        let radii = graph_radii(&cfg);
        let s = generate_graph(&cfg).unwrap();
        let side = cfg.side();
        let coords = |v: u64| vec![(v % side) as i64, (v / side) as i64];
        for w in 0..cfg.n() {
            let expected = (0..cfg.n())
                .filter(|&v| v != w && super::super::torus_distance(side, &coords(v), &coords(w)) < radii[v as usize])
                .count() as u64;
            assert_eq!(s.in_degrees[w as usize], expected);
        }
    }

    #[test]
    fn planted_cover() {
        let cfg = TorusConfig::new(2, 8, 3.0, 1).unwrap();
        let n = cfg.n();
        let s = generate_graph_planted(&cfg, &[(0, 8.0 * 2f64.sqrt() + 1.0)], GraphLimits::default()).unwrap();
        assert_eq!(s.out_degrees[0], n - 1);
        let st = condensation_stats(&s, 1, 0.5);
        assert!(st.big_out_count >= 1);
        assert_eq!(st.top_k_out_share, (n - 1) as f64 / n as f64);
        let all = condensation_stats(&s, n as usize, 0.5);
        assert!((all.top_k_out_share - s.rho_n).abs() < 1e-12);
    }

    #[test]
    fn visit_cap_enforced() {
        let cfg = TorusConfig::new(2, 8, 3.0, 1).unwrap();
        let limits = GraphLimits { max_vertices: 1000, max_visits: 10 };
        assert!(matches!(generate_graph_planted(&cfg, &[], limits), Err(Error::Limit(_))));
    }

    #[test]
    fn csv_round_trip() {
        let cfg = TorusConfig::new(1, 5, 1.5, 1).unwrap();
        let s = generate_graph(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deg.csv");
        s.write_csv(&path).unwrap();
        assert_eq!(DegreeSummary::read_csv(&path).unwrap(), s);
    }
}
