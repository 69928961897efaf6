//! Exact interval probabilities of a grid scheme against plain sampling.

use bigjumps::rare_event::{estimate_interval, exact_dp};
use bigjumps::scheme::SchemeSpec;

fn main() -> bigjumps::Result<()> {
    let spec = SchemeSpec::discrete_grid(vec![0.6, 0.25, 0.1, 0.05])?;
    let n = 40;
    let level = spec.level(n)?;
    let step = level.grid().expect("grid scheme").step;
    for (a, b) in [(10, 20), (30, 60), (60, 120)] {
        let (lo, hi) = ((a as f64 - 0.5) * step, (b as f64 + 0.5) * step);
        let exact = exact_dp(&spec, n, lo, hi)?;
        let est = estimate_interval(&level, lo, hi, 200_000, a)?;
        println!("[{lo:.1}, {hi:.1}]: exact {exact:.6}, sampled {:.6} ± {:.6}", est.prob, est.std_error);
    }
    Ok(())
}
