//! Conditioned replicas: how many coordinates carry the excess.

use bigjumps::rare_event::{conditional_profiles, corollary1_fraction, fraction_with_at_least, RhoWindow};
use bigjumps::scheme::{mean_mu_n, SchemeSpec};

fn main() -> bigjumps::Result<()> {
    let spec = SchemeSpec::truncated_pareto(2.5, 2.5)?;
    let window = RhoWindow::fixed(1.5, 0.2)?;
    for n in [64, 512] {
        let level = spec.level(n)?;
        let mu = mean_mu_n(&level, 0, 0).value;
        let run = conditional_profiles(&level, &window, mu, 0.2, 200, 20_000_000, n)?;
        println!(
            "n = {n}: {} hits from {} replicas; exactly 2 big jumps near rho n: {:.2}; three or more: {:.2}",
            run.profiles.len(),
            run.samples_used,
            corollary1_fraction(&run.profiles, 2, 0.2, mu, 1.5),
            fraction_with_at_least(&run.profiles, 3)
        );
        if let Some(p) = run.profiles.first() {
            println!("  first profile: big jumps {:?}, bulk {:.1}", p.big_jumps, p.bulk_sum);
        }
    }
    Ok(())
}
