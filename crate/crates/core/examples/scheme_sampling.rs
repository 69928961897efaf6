//! Draws from the built-in schemes and checks the tail window against h.

use bigjumps::scheme::{mean_mu_n, parse_config, tail_check, BatchKind, SampleBatch, SchemeSpec};

fn main() -> bigjumps::Result<()> {
    let specs = [
        SchemeSpec::truncated_pareto(1.5, 1.5)?,
        SchemeSpec::smooth_cutoff(1.0, 1.5)?,
        SchemeSpec::lattice_ball(1, 2.0)?,
        parse_config("shape = discrete_grid\npmf = 0.5, 0.3, 0.2\n")?,
    ];
    for (spec, n) in specs.iter().zip([1000, 1000, 1001, 1000]) {
        let level = spec.level(n)?;
        let mean = mean_mu_n(&level, 100_000, 1);
        println!("{:?}: mu_{n} = {:.5} ({})", spec.shape, mean.value, mean.method);
        if spec.alpha().is_ok() {
            let t = tail_check(spec, n, 0.3, 0.6, 200_000, 2)?;
            println!("  P(0.3n <= W < 0.6n): {:.3e} ± {:.1e}, exact {:.3e}, h-prediction {:.3e}", t.empirical, t.std_error, t.exact, t.predicted);
        }
    }

    let batch = SampleBatch::generate(&specs[0], 100, 1000, 3, BatchKind::Sum)?;
    let dir = std::env::temp_dir().join("bigjumps-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("sums.csv");
    let side = batch.write_csv(&path)?;
    println!("wrote {} and {}", path.display(), side.display());
    Ok(())
}
