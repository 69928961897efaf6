//! Chi-square test of jump sizes, on draws from the limit law itself.

use bigjumps::krho::krho_eval;
use bigjumps::rare_event::{corollary2_gof, profiles_from_limit, GofOptions, LimitSampler};
use bigjumps::scheme::SchemeSpec;

fn main() -> bigjumps::Result<()> {
    let h = SchemeSpec::truncated_pareto(1.2, 1.2)?.density()?;
    let kr = krho_eval(h.as_ref(), 1.5, 2, 1e-10)?;
    let sampler = LimitSampler::new(h.as_ref(), 1.5, 2)?;
    let mut rejected = 0;
    for rep in 0..20 {
        let profiles = profiles_from_limit(&sampler, h.as_ref(), 1 << 16, 300, rep);
        let g = corollary2_gof(&profiles, h.as_ref(), 1.5, 2, &kr, &GofOptions::new(8, rep))?;
        if rep == 0 {
            println!("observed {:?}", g.observed);
            println!("expected {:?}", g.expected.iter().map(|e| format!("{e:.1}")).collect::<Vec<_>>());
        }
        rejected += (g.p_value < 0.01) as usize;
    }
    println!("{rejected} of 20 calibration runs rejected at the 1% level");
    Ok(())
}
