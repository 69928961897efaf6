//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::Instant;

use bigjumps::density::Uniform;
use bigjumps::krho::{krho_eval, krho_grid, krho_monte_carlo};
use bigjumps::rare_event::{
    conditional_profiles, corollary1_fraction, corollary2_gof, default_eps, estimate_interval, estimate_naive,
    estimate_structured, exact_distribution, exact_dp, fraction_with_at_least, profiles_from_limit,
    theorem1_rhs_for, tk_window_prob, GofOptions, LimitSampler, RhoWindow,
};
use bigjumps::rng::stream;
use bigjumps::scheme::{lln_deviation, mean_mu_n, SchemeSpec};
use bigjumps::torus::{
    ball_point_count, ball_volume, calibrate_h, condensation_stats, g_eval, generate_graph, generate_graph_planted,
    sample_radius, sandwich_constant, GraphLimits, TorusConfig,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn a1() -> Outcome {
    let mut rng = stream(2024, 0);
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let n = rng.random_range(2..=64u64);
        let m = rng.random_range(2..=16usize);
        let raw: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let spec = SchemeSpec::discrete_grid(raw.iter().map(|p| p / total).collect()).unwrap();
        let level = spec.level(n).unwrap();
        let step = level.grid().unwrap().step;
        let dist = exact_distribution(&level).unwrap();
        let (mut q1, mut q2): (f64, f64) = (rng.random(), rng.random());
        if q1 > q2 {
            std::mem::swap(&mut q1, &mut q2);
        }
        let index_at = |q: f64| {
            let mut acc = 0.0;
            dist.iter().position(|p| {
                acc += p;
                acc >= q
            })
            .unwrap_or(dist.len() - 1)
        };
        let (j1, j2) = (index_at(q1), index_at(q2));
        // half-lattice endpoints: no sum sits on a boundary
        let (lo, hi) = ((j1 as f64 - 0.5) * step, (j2 as f64 + 0.5) * step);
        let exact = exact_dp(&spec, n, lo, hi).unwrap();
        let est = estimate_interval(&level, lo, hi, 1_000_000, 100 + case).unwrap();
        let se = (exact * (1.0 - exact) / 1e6).sqrt();
        let z = if se > 0.0 { (est.prob - exact).abs() / se } else if est.prob == exact { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
        within += (z <= 4.0) as usize;
    }
    outcome(within >= 48, format!("{within}/50 within 4 SE (worst |z| = {worst:.2})"))
}

fn a2() -> Outcome {
    let u = Uniform { level: 1.0 };
    let k2 = krho_eval(&u, 1.5, 2, 1e-10).unwrap().value;
    let k3 = krho_eval(&u, 2.5, 3, 1e-10).unwrap().value;
    let pareto = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap().density().unwrap();
    let k1 = krho_eval(pareto.as_ref(), 0.5, 1, 1e-10).unwrap().value;
    let k1_ok = k1 == pareto.eval(0.5);
    let grid = krho_grid(pareto.as_ref(), 1.5, 2, 1e-10).unwrap();
    let mc = krho_monte_carlo(pareto.as_ref(), 1.5, 2, 1 << 20, 7).unwrap();
    let agree = (grid.value - mc.value).abs() <= grid.abs_error_bound + mc.abs_error_bound;
    let pass = (k2 - 0.5).abs() <= 1e-6 && (k3 - 0.75).abs() <= 1e-5 && k1_ok && agree;
    outcome(
        pass,
        format!(
            "k=2: {k2:.12} (|d| {:.1e}); k=3: {k3:.12} vs 0.75 (|d| {:.1e}); k=1 exact: {k1_ok}; grid {:.10} ± {:.1e} vs mc {:.10} ± {:.1e}",
            (k2 - 0.5).abs(),
            (k3 - 0.75).abs(),
            grid.value,
            grid.abs_error_bound,
            mc.value,
            mc.abs_error_bound
        ),
    )
}

fn a3() -> Outcome {
    let spec = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap();
    let h = spec.density().unwrap();
    let window = RhoWindow::fixed(0.5, 0.1).unwrap();
    let kr = krho_eval(h.as_ref(), 0.5, 1, 1e-10).unwrap();
    let eps = default_eps(0.5, 1.5);
    let mut ratios = Vec::new();
    let mut text = Vec::new();
    for (i, &n) in [64u64, 256, 1024, 4096].iter().enumerate() {
        let level = spec.level(n).unwrap();
        let mu = mean_mu_n(&level, 0, 0).value;
        let rhs = theorem1_rhs_for(&spec, n, &window, &kr).unwrap();
        let naive = estimate_naive(&level, &window, mu, 1_000_000, 30 + i as u64).unwrap();
        let (mut p, mut se) = (naive.prob, naive.std_error);
        if n >= 1024 {
            let s = estimate_structured(&level, &window, mu, eps, 1_000_000, 40 + i as u64, None, None).unwrap().estimate;
            let (wa, wb) = (se.powi(-2), s.std_error.powi(-2));
            p = (wa * p + wb * s.prob) / (wa + wb);
            se = (wa + wb).sqrt().recip();
        }
        ratios.push(p / rhs);
        text.push(format!("n={n}: {:.4} ± {:.4}", p / rhs, se / rhs));
    }
    let first = (ratios[0] - 1.0).abs();
    let last = (ratios[3] - 1.0).abs();
    let pass = ratios.iter().all(|r| *r > 0.0) && last < first && last <= 0.35;
    outcome(pass, text.join(", "))
}

fn a4() -> Outcome {
    let spec = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap();
    let window = RhoWindow::fixed(0.5, 0.1).unwrap();
    let eps = default_eps(0.5, 1.5);
    let run = |n: u64, seed: u64| {
        let level = spec.level(n).unwrap();
        let mu = mean_mu_n(&level, 0, 0).value;
        (conditional_profiles(&level, &window, mu, eps, 300, 50_000_000, seed).unwrap(), mu)
    };
    let (big, mu) = run(512, 51);
    let (small, _) = run(64, 52);
    let frac = corollary1_fraction(&big.profiles, 1, 0.1, mu, 0.5);
    let multi_512 = fraction_with_at_least(&big.profiles, 2);
    let multi_64 = fraction_with_at_least(&small.profiles, 2);
    let pass = big.profiles.len() >= 300 && frac >= 0.9 && multi_512 < multi_64;
    outcome(
        pass,
        format!(
            "eps={eps}: structure fraction {frac:.3} at n=512 ({} hits); >=2 big jumps {multi_512:.3} (n=512) vs {multi_64:.3} (n=64)",
            big.profiles.len()
        ),
    )
}

fn a5() -> Outcome {
    let spec = SchemeSpec::truncated_pareto(1.2, 1.2).unwrap();
    let h = spec.density().unwrap();
    let kr = krho_eval(h.as_ref(), 1.5, 2, 1e-10).unwrap();
    let window = RhoWindow::fixed(1.5, 0.2).unwrap();
    let level = spec.level(256).unwrap();
    let mu = mean_mu_n(&level, 0, 0).value;
    let run = conditional_profiles(&level, &window, mu, 0.25, 300, 50_000_000, 61).unwrap();
    let gof = corollary2_gof(&run.profiles, h.as_ref(), 1.5, 2, &kr, &GofOptions::new(8, 62)).unwrap();
    let sampler = LimitSampler::new(h.as_ref(), 1.5, 2).unwrap();
    let mut accepted = 0;
    for rep in 0..100u64 {
        let ps = profiles_from_limit(&sampler, h.as_ref(), 1 << 20, 300, 1000 + rep);
        let g = corollary2_gof(&ps, h.as_ref(), 1.5, 2, &kr, &GofOptions::new(8, rep)).unwrap();
        accepted += (g.p_value >= 0.01) as usize;
    }
    let pass = run.profiles.len() >= 300 && gof.p_value >= 0.01 && accepted >= 95;
    outcome(
        pass,
        format!(
            "n=256: p = {:.3e} (chi2 {:.1}, dof {}, {} of {} hits with exactly 2 big jumps); calibration {accepted}/100 with p >= 0.01",
            gof.p_value,
            gof.statistic,
            gof.dof,
            gof.used,
            run.profiles.len()
        ),
    )
}

fn a6() -> Outcome {
    let spec = SchemeSpec::truncated_pareto(1.2, 1.2).unwrap();
    let h = spec.density().unwrap();
    let kval = krho_eval(h.as_ref(), 1.5, 2, 1e-10).unwrap().value;
    let (s1, s2) = (1.4, 1.6);
    let mut pts = Vec::new();
    for (i, &n) in [256u64, 1024, 4096].iter().enumerate() {
        let level = spec.level(n).unwrap();
        let e = tk_window_prob(&level, 2, s1, s2, 2_000_000, 70 + i as u64).unwrap();
        let scale = (s2 - s1) * (n as f64).powf(-2.4) * kval;
        pts.push((n, e.prob / scale, e.std_error / scale));
    }
    let mut pass = true;
    for w in pts.windows(2) {
        let slack = 2.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt();
        pass &= (w[1].1 - 1.0).abs() <= (w[0].1 - 1.0).abs() + slack;
    }
    pass &= (pts[2].1 - 1.0).abs() < (pts[0].1 - 1.0).abs();
    let atom_limit = (kval + 2.0 * h.atom() * h.eval(0.5)) / kval;
    let text: Vec<String> = pts.iter().map(|(n, r, se)| format!("n={n}: {r:.4} ± {se:.4}")).collect();
    outcome(pass, format!("{} (limit with the cut-off atom: {atom_limit:.4})", text.join(", ")))
}

fn a7() -> Outcome {
    let report = calibrate_h(1, 1.5, &[128, 512, 2048], &[0.5], 1_000_000, 81).unwrap();
    let tails_ok = report.points.iter().all(|p| p.z.abs() <= 3.0);
    let g_err = (g_eval(2, std::f64::consts::FRAC_1_SQRT_2) - std::f64::consts::FRAC_PI_4).abs();
    let mut sandwich_ok = true;
    let mut consts = Vec::new();
    for (d, sizes) in [(1u32, [8u64, 32, 128]), (2, [8, 16, 32]), (3, [4, 8, 16])] {
        let c = sizes.iter().map(|&h| sandwich_constant(d, h)).fold(0.0, f64::max);
        consts.push(format!("c_{d}={c:.3}"));
        let mut rng = stream(82, d as u64);
        for i in 0..10_000 {
            let half = sizes[i % 3];
            let r = sample_radius(1.5, &mut rng) * rng.random_range(1.0..(half as f64));
            let diff = ball_point_count(d, half, r) as f64 - ball_volume(d, half, r);
            sandwich_ok &= diff.abs() <= c * (half as f64).powi(d as i32 - 1) + 1e-9;
        }
    }
    let zs: Vec<String> = report.points.iter().map(|p| format!("N={}: {:.3} (z {:+.2})", p.half_width, p.scaled, p.z)).collect();
    outcome(
        tails_ok && g_err <= 1e-8 && sandwich_ok,
        format!(
            "target {:.4}; {}; measured constant {:.4} ± {:.4} vs (4/d)^(beta/2) = {:.4} and (4d)^(-beta/2) = {:.4}; |g(1/sqrt2) - pi/4| = {g_err:.1e}; sandwich {} ({})",
            report.points[0].target,
            zs.join(", "),
            report.measured_constant,
            report.measured_se,
            report.analytic_constant,
            report.inverse_4d_constant,
            if sandwich_ok { "holds" } else { "violated" },
            consts.join(", ")
        ),
    )
}

fn a8() -> Outcome {
    let mut conserved = true;
    let mut decreasing = 0;
    for seed in 0..20u64 {
        let mut shares = Vec::new();
        for half in [16u64, 32, 64] {
            let s = generate_graph(&TorusConfig::new(2, half, 3.0, seed).unwrap()).unwrap();
            conserved &= s.out_degrees.iter().sum::<u64>() == s.in_degrees.iter().sum::<u64>();
            shares.push(condensation_stats(&s, 1, 0.5).max_in_share);
        }
        decreasing += (shares[0] > shares[1] && shares[1] > shares[2]) as usize;
    }
    let cfg = TorusConfig::new(2, 16, 3.0, 5).unwrap();
    let planted = generate_graph_planted(&cfg, &[(0, 16.0 * 2f64.sqrt() + 1.0)], GraphLimits::default()).unwrap();
    let n = planted.n() as f64;
    let stats = condensation_stats(&planted, 1, 0.5);
    let share_ok = planted.out_degrees[0] as f64 / n == (n - 1.0) / n && stats.top_k_out_share == (n - 1.0) / n;
    let pass = conserved && decreasing >= 16 && stats.big_out_count >= 1 && share_ok;
    outcome(
        pass,
        format!(
            "conservation {}; max_in_share decreasing in {decreasing}/20 seeds; planted: big_out_count {}, out-share exact {share_ok}",
            if conserved { "exact" } else { "broken" },
            stats.big_out_count
        ),
    )
}

fn a9() -> Outcome {
    let spec = SchemeSpec::truncated_pareto(1.5, 1.5).unwrap();
    let mut pts = Vec::new();
    for (i, &n) in [256u64, 1024, 4096].iter().enumerate() {
        let e = lln_deviation(&spec.level(n).unwrap(), 0.05, 200_000, 90 + i as u64).unwrap();
        pts.push((n, e.prob, e.std_error));
    }
    let pass = pts.windows(2).all(|w| w[1].1 <= w[0].1 + 2.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt());
    let text: Vec<String> = pts.iter().map(|(n, p, se)| format!("n={n}: {p:.4} ± {se:.4}")).collect();
    outcome(pass, text.join(", "))
}

fn main() {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('A')).collect();
    let checks: [(&str, fn() -> Outcome); 9] =
        [("A1", a1), ("A2", a2), ("A3", a3), ("A4", a4), ("A5", a5), ("A6", a6), ("A7", a7), ("A8", a8), ("A9", a9)];
    let mut failed = 0;
    for (name, check) in checks {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        println!("{name} {} [{secs:.1}s] {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += (!o.pass) as usize;
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
