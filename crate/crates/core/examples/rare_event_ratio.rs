//! P(S_n in I_n) over its asymptotic prediction, naive and stratified.

use bigjumps::krho::krho_eval;
use bigjumps::rare_event::{ratio_sweep, Centering, RhoWindow, SweepOptions};
use bigjumps::scheme::SchemeSpec;

fn main() -> bigjumps::Result<()> {
    let spec = SchemeSpec::truncated_pareto(1.5, 1.5)?;
    let window = RhoWindow::fixed(0.5, 0.1)?;
    let kr = krho_eval(spec.density()?.as_ref(), 0.5, 1, 1e-10)?;
    let mut opts = SweepOptions::new(100_000, 1);
    opts.structured_eps = Some(0.05);
    for row in ratio_sweep(&spec, &window, &[64, 256, 1024], &kr, Centering::FiniteN, &opts)? {
        println!("n = {:5} {:>10}: P = {:.4e} ± {:.1e}, ratio {:.3}", row.n, row.method, row.prob, row.std_error, row.ratio);
    }
    Ok(())
}
