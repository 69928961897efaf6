//! Clipped-ball volumes, lattice counts, and the out-degree tail constant.

use bigjumps::torus::{ball_point_count, ball_volume, calibrate_h, g_eval, g_inverse, h_lattice, sandwich_constant};

fn main() -> bigjumps::Result<()> {
    for d in 1..=3 {
        println!("d = {d}: g(0.5) = {:.6}, g^-1(0.5) = {:.6}, h(0.5) at beta = 2d: {:.4}", g_eval(d, 0.5), g_inverse(d, 0.5)?, h_lattice(d, 2.0 * d as f64, 0.5)?);
    }
    println!("d = 2, g(1/sqrt 2) - pi/4 = {:.2e}", g_eval(2, std::f64::consts::FRAC_1_SQRT_2) - std::f64::consts::FRAC_PI_4);
    for r in [1.5, 2.1, 7.3, 40.0] {
        println!("d = 2, N = 20, R = {r}: {} points, volume {:.1}", ball_point_count(2, 20, r), ball_volume(2, 20, r));
    }
    println!("lattice count vs volume: c_2(32) = {:.3}", sandwich_constant(2, 32));
    let report = calibrate_h(1, 1.5, &[128, 512], &[0.3, 0.5, 0.8], 200_000, 1)?;
    for p in &report.points {
        println!("N = {:4}, a = {}: n^beta P = {:.3} ± {:.3}, limit {:.3}", p.half_width, p.a, p.scaled, p.scaled_se, p.target);
    }
    println!("measured constant {:.4}; (4/d)^(beta/2) = {:.4}; (4d)^(-beta/2) = {:.4}", report.measured_constant, report.analytic_constant, report.inverse_4d_constant);
    Ok(())
}
