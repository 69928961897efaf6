//! Stratifying over the number of big coordinates.

use bigjumps::krho::krho_eval;
use bigjumps::rare_event::{estimate_structured, RhoWindow};
use bigjumps::scheme::{mean_mu_n, SchemeSpec};

fn main() -> bigjumps::Result<()> {
    let spec = SchemeSpec::truncated_pareto(1.5, 1.5)?;
    let window = RhoWindow::fixed(1.5, 0.2)?;
    let kr = krho_eval(spec.density()?.as_ref(), 1.5, 2, 1e-10)?;
    let level = spec.level(1024)?;
    let mu = mean_mu_n(&level, 0, 0).value;
    let s = estimate_structured(&level, &window, mu, 0.1, 400_000, 1, Some(0.1), Some(&kr))?;
    println!("P = {:.4e} ± {:.1e}, prediction {:.4e}", s.estimate.prob, s.estimate.std_error, s.rhs.unwrap_or(f64::NAN));
    println!("two-big-jump stratum alone: {:.4e}; bulk within 0.1 n of its mean: {:.3}", s.dominant.prob, s.bulk_factor.unwrap_or(f64::NAN));
    for st in s.strata.iter().filter(|st| st.hits > 0) {
        println!("  J = {}: weight {:.3e}, {} / {} hits", st.big, st.weight, st.hits, st.samples);
    }
    Ok(())
}
