//! `key = value` scheme files.
//!
//! ```text
//! # truncated Pareto
//! shape = truncated_pareto
//! c = 1.5
//! alpha = 1.5
//! ```
//!
//! Keys: `shape`, `alpha`, `beta`, `c`, `d`, `grid_step` (`n/m`), `pmf`, `mu`.

use std::collections::BTreeMap;
use std::path::Path;

use super::{SchemeSpec, Shape};
use crate::error::{Error, Result};

const KEYS: [&str; 8] = ["shape", "alpha", "beta", "c", "d", "grid_step", "pmf", "mu"];

pub fn load_config(path: &Path) -> Result<SchemeSpec> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn parse_config(text: &str) -> Result<SchemeSpec> {
    let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Config { line: i + 1, msg };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key '{key}'")));
        }
        if entries.insert(key, (i + 1, value.trim())).is_some() {
            return Err(err(format!("duplicate key '{key}'")));
        }
    }

    let last_line = text.lines().count().max(1);
    let get = |key: &str| entries.get(key).copied();
    let need = |key: &str| get(key).ok_or_else(|| Error::Config { line: last_line, msg: format!("missing key '{key}'") });
    let num = |key: &str| -> Result<Option<f64>> {
        get(key)
            .map(|(line, v)| v.parse::<f64>().map_err(|_| Error::Config { line, msg: format!("'{key}' is not a number: '{v}'") }))
            .transpose()
    };
    let req = |key: &str| -> Result<f64> {
        need(key)?;
        Ok(num(key)?.expect("present"))
    };
    let allow_only = |allowed: &[&str]| -> Result<()> {
        for (key, (line, _)) in &entries {
            if !allowed.contains(key) {
                return Err(Error::Config { line: *line, msg: format!("key '{key}' does not apply to this shape") });
            }
        }
        Ok(())
    };

    let (shape_line, shape) = need("shape")?;
    let shape = match shape {
        "truncated_pareto" | "smooth_cutoff" => {
            allow_only(&["shape", "c", "alpha", "mu"])?;
            let (c, alpha) = (req("c")?, req("alpha")?);
            if shape == "truncated_pareto" {
                Shape::TruncatedPareto { c, alpha }
            } else {
                Shape::SmoothCutoff { c, alpha }
            }
        }
        "lattice_ball" => {
            allow_only(&["shape", "d", "beta", "mu"])?;
            let (line, d) = need("d")?;
            let d = d.parse().map_err(|_| Error::Config { line, msg: format!("'d' is not a positive integer: '{d}'") })?;
            Shape::LatticeBall { d, beta: req("beta")? }
        }
        "discrete_grid" => {
            allow_only(&["shape", "pmf", "grid_step", "alpha", "mu"])?;
            let (line, list) = need("pmf")?;
            let pmf = list
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Config { line, msg: format!("bad pmf list '{list}'") })?;
            if let Some((line, step)) = get("grid_step") {
                let m = step
                    .replace(' ', "")
                    .strip_prefix("n/")
                    .and_then(|m| m.parse::<usize>().ok())
                    .ok_or_else(|| Error::Config { line, msg: format!("grid_step must look like 'n/m', got '{step}'") })?;
                if m + 1 != pmf.len() {
                    return Err(Error::Config {
                        line,
                        msg: format!("grid_step n/{m} needs {} pmf entries, got {}", m + 1, pmf.len()),
                    });
                }
            }
            Shape::DiscreteGrid { pmf, alpha: num("alpha")? }
        }
        other => return Err(Error::Config { line: shape_line, msg: format!("unknown shape '{other}'") }),
    };
    let spec = SchemeSpec { shape, mu_limit: num("mu")? };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_shape() {
        let p = parse_config("# a\nshape = truncated_pareto\nc = 1.5\nalpha=1.5 # tail\n").unwrap();
        assert_eq!(p.shape, Shape::TruncatedPareto { c: 1.5, alpha: 1.5 });
        let l = parse_config("shape = lattice_ball\nd = 2\nbeta = 3\nmu = 9.0").unwrap();
        assert_eq!(l.shape, Shape::LatticeBall { d: 2, beta: 3.0 });
        assert_eq!(l.mu_limit, Some(9.0));
        let g = parse_config("shape = discrete_grid\ngrid_step = n/2\npmf = 0.5, 0.25, 0.25\n").unwrap();
        assert_eq!(g.shape, Shape::DiscreteGrid { pmf: vec![0.5, 0.25, 0.25], alpha: None });
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_config("shape = truncated_pareto\nc = x\nalpha = 1.5").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
        let e = parse_config("shape = truncated_pareto\nc = 1\nalpha = 1.5\nwidth = 2").unwrap_err();
        assert!(matches!(e, Error::Config { line: 4, .. }));
        let e = parse_config("shape = discrete_grid\ngrid_step = n/3\npmf = 0.5 0.5").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }));
    }

    #[test]
    fn no_silent_defaults() {
        assert!(parse_config("shape = truncated_pareto\nc = 1.5").is_err());
        assert!(parse_config("c = 1.5\nalpha = 2").is_err());
        assert!(parse_config("shape = smooth_cutoff\nc = 1\nalpha = 2\nbeta = 3").is_err());
    }
}
