//! P(n sigma1 <= W_1 + W_2 <= n sigma2) against (sigma2 - sigma1) n^(-2 alpha) K.

use bigjumps::krho::{krho_eval, krho_with_atom};
use bigjumps::rare_event::tk_window_prob;
use bigjumps::scheme::SchemeSpec;

fn main() -> bigjumps::Result<()> {
    let alpha = 1.2;
    let spec = SchemeSpec::truncated_pareto(1.2, alpha)?;
    let h = spec.density()?;
    let k = krho_eval(h.as_ref(), 1.5, 2, 1e-10)?.value;
    let k_atom = krho_with_atom(h.as_ref(), 1.5, 2, 1e-10)?.value;
    for n in [256u64, 1024, 4096] {
        let e = tk_window_prob(&spec.level(n)?, 2, 1.4, 1.6, 500_000, n)?;
        let scale = 0.2 * (n as f64).powf(-2.0 * alpha);
        println!("n = {n:5}: ratio to K {:.4}, to K with atom {:.4}", e.prob / (scale * k), e.prob / (scale * k_atom));
    }
    Ok(())
}
