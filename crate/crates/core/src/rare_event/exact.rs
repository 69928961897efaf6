//! Exact law of grid-scheme sums by repeated convolution.

use crate::error::{invalid, Error, Result};
use crate::scheme::{Level, SchemeSpec};

/// Largest `n m` accepted by [`exact_distribution`].
pub const MAX_CELLS: u64 = 1_000_000;

/// Law of the index sum of `times` independent draws from `pmf`.
pub fn convolution_power(pmf: &[f64], times: u64) -> Vec<f64> {
    let m = pmf.len() - 1;
    let support: Vec<(usize, f64)> = pmf.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect();
    let mut dist = vec![0.0; times as usize * m + 1];
    dist[0] = 1.0;
    for step in 0..times as usize {
        let top = step * m;
        for j in (0..=top).rev() {
            let mass = dist[j];
            if mass == 0.0 {
                continue;
            }
            dist[j] = 0.0;
            for &(i, p) in &support {
                dist[j + i] += mass * p;
            }
        }
    }
    dist
}

/// Law of the index sum `S_n m / n` for a grid level.
pub fn exact_distribution(level: &Level) -> Result<Vec<f64>> {
    let grid = level.grid().ok_or_else(|| Error::Unsupported("exact convolution needs a discrete grid scheme".into()))?;
    let cells = level.n.saturating_mul(grid.m() as u64);
    if cells > MAX_CELLS {
        return Err(invalid(format!("n m = {cells} grid cells exceeds the {MAX_CELLS} cap")));
    }
    let dist = convolution_power(&grid.pmf, level.n);
    let total: f64 = dist.iter().sum();
    debug_assert!((total - 1.0).abs() < 1e-10, "distribution sums to {total}");
    Ok(dist)
}

/// `P(lo <= T <= hi)` where `T` is the sum of `times` draws of the grid level.
pub fn exact_interval(level: &Level, times: u64, lo: f64, hi: f64) -> Result<f64> {
    let grid = level.grid().ok_or_else(|| Error::Unsupported("exact convolution needs a discrete grid scheme".into()))?;
    let cells = times.saturating_mul(grid.m() as u64);
    if cells > MAX_CELLS {
        return Err(invalid(format!("{cells} grid cells exceeds the {MAX_CELLS} cap")));
    }
    let dist = convolution_power(&grid.pmf, times);
    Ok(dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| {
            let s = j as f64 * grid.step;
            s >= lo && s <= hi
        })
        .map(|(_, p)| p)
        .sum())
}

/// Exact `P(lo <= S_n <= hi)` for a discrete grid scheme.
pub fn exact_dp(spec: &SchemeSpec, n: u64, lo: f64, hi: f64) -> Result<f64> {
    if !spec.is_grid() {
        return Err(Error::Unsupported("exact_dp needs a discrete grid scheme".into()));
    }
    let level = spec.level(n)?;
    exact_distribution(&level)?;
    exact_interval(&level, n, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let spec = SchemeSpec::discrete_grid(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((exact_dp(&spec, 2, 2.0, 2.0).unwrap() - 5.0 / 16.0).abs() < 1e-15);
        let zero = SchemeSpec::discrete_grid(vec![1.0, 0.0]).unwrap();
        assert_eq!(exact_dp(&zero, 9, -1.0, 0.0).unwrap(), 1.0);
        // n = 1: mass of the pmf itself (values 0, 1/3, 2/3, 1)
        let four = SchemeSpec::discrete_grid(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((exact_dp(&four, 1, 0.3, 0.7).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distribution_normalised() {
        let spec = SchemeSpec::discrete_grid(vec![0.3, 0.1, 0.0, 0.2, 0.4]).unwrap();
        let lv = spec.level(64).unwrap();
        let d = exact_distribution(&lv).unwrap();
        assert_eq!(d.len(), 64 * 4 + 1);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects() {
        let p = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap();
        assert!(matches!(exact_dp(&p, 4, 0.0, 1.0), Err(Error::Unsupported(_))));
        let g = SchemeSpec::discrete_grid(vec![0.5; 2]).unwrap();
        assert!(exact_dp(&g, 2_000_000, 0.0, 1.0).is_err());
    }
}
