//! K_rho for a few shape densities, by grid and by Monte Carlo.

use bigjumps::density::{Tabulated, Uniform};
use bigjumps::krho::{krho_eval, krho_grid, krho_monte_carlo, krho_with_atom};
use bigjumps::scheme::SchemeSpec;

fn main() -> bigjumps::Result<()> {
    let flat = Uniform { level: 1.0 };
    for (rho, k) in [(0.5, 1), (1.5, 2), (2.5, 3)] {
        let r = krho_eval(&flat, rho, k, 1e-10)?;
        println!("h = 1, rho = {rho}: K = {:.12} ({:?})", r.value, r.method);
    }

    let pareto = SchemeSpec::truncated_pareto(1.5, 1.5)?.density()?;
    let grid = krho_grid(pareto.as_ref(), 1.5, 2, 1e-10)?;
    let mc = krho_monte_carlo(pareto.as_ref(), 1.5, 2, 1 << 20, 1)?;
    println!("pareto grid {:.8} ± {:.1e}, monte carlo {:.8} ± {:.1e}", grid.value, grid.abs_error_bound, mc.value, mc.abs_error_bound);
    let with_atom = krho_with_atom(pareto.as_ref(), 1.5, 2, 1e-10)?;
    println!("with the mass at the cut-off: {:.8}", with_atom.value);

    let smooth = SchemeSpec::smooth_cutoff(1.0, 1.5)?.density()?;
    println!("smooth cut-off, rho = 1.5: {:.8}", krho_eval(smooth.as_ref(), 1.5, 2, 1e-10)?.value);

    // piecewise-linear h from points
    let table = Tabulated::new(vec![(0.05, 2.0), (0.5, 1.0), (0.95, 2.0)])?;
    println!("tabulated, rho = 1.3: {:.8}", krho_eval(&table, 1.3, 2, 1e-10)?.value);
    Ok(())
}
