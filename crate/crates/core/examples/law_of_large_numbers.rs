//! P(|S_n - n mu_n| > zeta n) shrinking with n.

use bigjumps::scheme::{lln_deviation, SchemeSpec};

fn main() -> bigjumps::Result<()> {
    let spec = SchemeSpec::truncated_pareto(1.5, 1.5)?;
    for n in [256, 1024, 4096] {
        let e = lln_deviation(&spec.level(n)?, 0.25, 50_000, n)?;
        println!("n = {n:5}: {:.4} ± {:.4}", e.prob, e.std_error);
    }
    Ok(())
}
