use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::*;
use crate::density::{Density, Tabulated, Uniform};
use crate::error::{invalid, Error};
use crate::krho::{krho_eval_with, krho_with_atom, KrhoMethod, KrhoOptions, KrhoResult};
use crate::rare_event::{
    conditional_profiles, corollary1_fraction, corollary2_gof, default_eps, estimate_naive, estimate_structured,
    exact_dp, fraction_with_at_least, profiles_from_limit, ratio_sweep, theorem1_rhs_for, tk_window_prob,
    write_profiles_jsonl, write_sweep_csv, Centering, GofOptions, JumpProfile, LimitSampler, RhoWindow,
    SweepOptions, WidthRule,
};
use crate::scheme::{lln_deviation, mean_mu_n, tail_check, BatchKind, SampleBatch, SchemeSpec};
use crate::torus::{
    calibrate_h, condensation_stats, generate_graph_planted, DegreeSummary, GraphLimits, TorusConfig,
};

const GRAPH_CSV: &str = "graph_degrees.csv";
const GRAPH_JSON: &str = "graph.json";

struct Run<'a> {
    cli: &'a Cli,
    argv: Vec<String>,
    name: String,
    started: Instant,
    config: Option<ConfigEcho>,
    seed: Option<u64>,
}

impl Run<'_> {
    fn output(&self, explicit: &Option<PathBuf>, default_name: &str) -> Result<PathBuf> {
        let path = match explicit {
            Some(p) => p.clone(),
            None => self.cli.out_dir.join(default_name),
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        Ok(path)
    }

    fn scheme(&mut self, path: &Path) -> Result<SchemeSpec> {
        let text = std::fs::read_to_string(path)?;
        let spec = crate::scheme::parse_config(&text)?;
        self.config = Some(ConfigEcho { path: path.display().to_string(), text });
        Ok(spec)
    }

    /// Writes the manifest next to the first output.
    fn finish(self, outputs: &[&Path]) -> Result<()> {
        let manifest = RunManifest {
            subcommand: self.name,
            argv: self.argv,
            parameters: serde_json::to_value(self.cli)?,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: self.started.elapsed().as_secs_f64(),
            config: self.config,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let path = RunManifest::path_for(outputs[0]);
        std::fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn name_of(cmd: &Command) -> &'static str {
    match cmd {
        Command::Krho(_) => "krho",
        Command::TailCheck(_) => "tail-check",
        Command::Lln(_) => "lln",
        Command::Sample(_) => "sample",
        Command::Estimate(_) => "estimate",
        Command::LdpSweep(_) => "ldp-sweep",
        Command::Condition(_) => "condition",
        Command::Gof(_) => "gof",
        Command::Graph { command: GraphCommand::Gen(_) } => "graph-gen",
        Command::Graph { command: GraphCommand::Degrees(_) } => "graph-degrees",
        Command::Graph { command: GraphCommand::Condense(_) } => "graph-condense",
        Command::CalibrateH(_) => "calibrate-h",
        Command::Replay { .. } => "replay",
    }
}

/// Drops `--out-dir` from recorded arguments so the output directory is
/// always the one in force at run time.
fn strip_out_dir(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out-dir" {
            skip = true;
            continue;
        }
        if a.starts_with("--out-dir=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

pub(super) fn dispatch(cli: &Cli, argv: &[String]) -> Result<()> {
    if let Command::Replay { manifest } = &cli.command {
        let m = RunManifest::load(manifest)?;
        if let Some(cfg) = &m.config {
            match std::fs::read_to_string(&cfg.path) {
                Ok(text) if text == cfg.text => {}
                _ => log::warn!("config {} differs from the copy recorded in the manifest", cfg.path),
            }
        }
        let mut args = vec!["bigjumps".to_string(), "--out-dir".into(), cli.out_dir.display().to_string()];
        args.extend(strip_out_dir(&m.argv));
        let replayed = Cli::try_parse_from(&args).map_err(|e| invalid(format!("manifest arguments: {e}")))?;
        if matches!(replayed.command, Command::Replay { .. }) {
            return Err(invalid("a manifest cannot record a replay"));
        }
        return dispatch(&replayed, &args[1..]);
    }
    let mut recorded = vec!["--out-dir".to_string(), cli.out_dir.display().to_string()];
    recorded.extend(strip_out_dir(argv));
    std::fs::create_dir_all(&cli.out_dir)?;
    let run = Run {
        cli,
        argv: recorded,
        name: name_of(&cli.command).into(),
        started: Instant::now(),
        config: None,
        seed: None,
    };
    match &cli.command {
        Command::Krho(a) => krho(run, a),
        Command::TailCheck(a) => tail(run, a),
        Command::Lln(a) => lln(run, a),
        Command::Sample(a) => sample(run, a),
        Command::Estimate(a) => estimate(run, a),
        Command::LdpSweep(a) => sweep(run, a),
        Command::Condition(a) => condition(run, a),
        Command::Gof(a) => gof(run, a),
        Command::Graph { command } => match command {
            GraphCommand::Gen(a) => graph_gen(run, a),
            GraphCommand::Degrees(a) => graph_degrees(run, a),
            GraphCommand::Condense(a) => graph_condense(run, a),
        },
        Command::CalibrateH(a) => calibrate(run, a),
        Command::Replay { .. } => unreachable!("handled above"),
    }
}

fn k_for(rho: f64, k: Option<usize>) -> usize {
    k.unwrap_or(rho.ceil() as usize)
}

fn krho(mut run: Run, a: &KrhoArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let h: Density = match (&a.h, &a.scheme) {
        (Some(h), None) if h == "uniform" => std::sync::Arc::new(Uniform { level: 1.0 }),
        (Some(h), None) => std::sync::Arc::new(Tabulated::load(Path::new(h))?),
        (None, Some(path)) => run.scheme(path)?.density()?,
        _ => unreachable!("clap enforces exactly one source"),
    };
    let k = k_for(a.rho, a.k);
    let opts = KrhoOptions {
        method: match a.method {
            KrhoMethodArg::Auto => None,
            KrhoMethodArg::Grid => Some(KrhoMethod::Grid),
            KrhoMethodArg::MonteCarlo => Some(KrhoMethod::MonteCarlo),
        },
        seed: a.seed,
        ..KrhoOptions::default()
    };
    let r = if a.with_atom { krho_with_atom(h.as_ref(), a.rho, k, a.tol)? } else { krho_eval_with(h.as_ref(), a.rho, k, a.tol, &opts)? };
    let record = json!({
        "value": r.value,
        "abs_error_bound": r.abs_error_bound,
        "method": r.method,
        "diverged": r.diverged,
    });
    print_json(&record)?;
    let out = run.output(&a.out, "krho.json")?;
    write_json(&out, &r)?;
    run.finish(&[&out])
}

fn tail(mut run: Run, a: &TailCheckArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let spec = run.scheme(&a.scheme)?;
    let r = tail_check(&spec, a.n, a.a, a.b, a.samples, a.seed)?;
    print_json(&r)?;
    let out = run.output(&a.out, "tail-check.json")?;
    write_json(&out, &r)?;
    run.finish(&[&out])
}

fn lln(mut run: Run, a: &LlnArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let spec = run.scheme(&a.scheme)?;
    let out = run.output(&a.out, "lln.csv")?;
    let mut rows = Vec::new();
    for (i, &n) in a.n.iter().enumerate() {
        let level = spec.level(n)?;
        let mean = mean_mu_n(&level, a.samples, a.seed.wrapping_add(i as u64) ^ 0x5EED);
        let r = lln_deviation(&level, a.zeta, a.samples, a.seed.wrapping_add(i as u64))?;
        log::info!("n = {n}: P = {:.4e} ± {:.1e}", r.prob, r.std_error);
        rows.push(format!("{n},{:e},{:e},{},{},{:e},{}", r.prob, r.std_error, r.samples, r.hits, mean.value, mean.method));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(&out)?);
    writeln!(f, "n,prob,std_error,samples,hits,mu_n,mu_method")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    f.flush()?;
    drop(f);
    run.finish(&[&out])
}

fn sample(mut run: Run, a: &SampleArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let spec = run.scheme(&a.scheme)?;
    let kind = match a.kind {
        SampleKind::Draw => BatchKind::Draw,
        SampleKind::Sum => BatchKind::Sum,
    };
    let batch = SampleBatch::generate(&spec, a.n, a.replicas, a.seed, kind)?;
    let out = run.output(&a.out, "sample.csv")?;
    let side = batch.write_csv(&out)?;
    run.finish(&[&out, &side])
}

fn window_of(w: &WindowArgs, spec: &SchemeSpec) -> Result<RhoWindow> {
    let centered = !w.left;
    let wa = &w.width;
    if let Some(width) = wa.width {
        RhoWindow::new(w.rho, WidthRule::Fixed { width }, centered)
    } else if let Some(p) = &wa.width_power {
        let win = RhoWindow::power(w.rho, p[0], p[1], spec.alpha()?)?;
        Ok(RhoWindow { centered, ..win })
    } else if let Some(b) = &wa.between {
        RhoWindow::new(w.rho, WidthRule::Between { rho1: b[0], rho2: b[1] }, true)
    } else {
        unreachable!("clap requires one width rule")
    }
}

fn mu_ref(c: CenteringArg, spec: &SchemeSpec, n: u64, samples: u64, seed: u64) -> Result<f64> {
    match c {
        CenteringArg::FiniteN => Ok(mean_mu_n(&spec.level(n)?, samples.max(100), seed ^ 0x5EED).value),
        CenteringArg::Limit => spec.mu().ok_or_else(|| invalid("this scheme has no known limiting mean")),
        CenteringArg::Value(v) => Ok(v),
    }
}

fn eps_value(e: EpsArg, w: &RhoWindow, spec: &SchemeSpec) -> Result<f64> {
    match e {
        EpsArg::Value(v) => Ok(v),
        EpsArg::Default => Ok(default_eps(w.rho, spec.alpha()?)),
    }
}

fn krho_for(spec: &SchemeSpec, w: &RhoWindow) -> Result<KrhoResult> {
    krho_eval_with(spec.density()?.as_ref(), w.rho, w.k, 1e-8, &KrhoOptions::default())
}

fn estimate(mut run: Run, a: &EstimateArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let spec = run.scheme(&a.scheme)?;
    let w = window_of(&a.window, &spec)?;
    let level = spec.level(a.n)?;
    let mu = mu_ref(a.window.centering, &spec, a.n, a.samples, a.seed)?;
    let (lo, hi) = w.interval(a.n, mu);
    let kr = spec.alpha().ok().map(|_| krho_for(&spec, &w)).transpose()?;
    let rhs = match &kr {
        Some(k) if !k.diverged => Some(theorem1_rhs_for(&spec, a.n, &w, k)?),
        _ => None,
    };
    let mut extra = serde_json::Value::Null;
    let est = match a.method {
        EstimateMethod::Naive => estimate_naive(&level, &w, mu, a.samples, a.seed)?,
        EstimateMethod::Exact => crate::estimate::EstimateResult::exact(exact_dp(&spec, a.n, lo, hi)?, "exact"),
        EstimateMethod::Tk => {
            let (s1, s2) = w.bounds(a.n);
            tk_window_prob(&level, w.k, s1, s2, a.samples, a.seed)?
        }
        EstimateMethod::Structured => {
            let e = a.eps.ok_or_else(|| invalid("the structured method needs --eps (a number or `default`)"))?;
            let eps = eps_value(e, &w, &spec)?;
            let s = estimate_structured(&level, &w, mu, eps, a.samples, a.seed, None, kr.as_ref())?;
            extra = json!({ "eps": eps, "dominant": s.dominant, "strata": s.strata, "unsampled_weight": s.unsampled_weight });
            s.estimate
        }
    };
    let record = json!({
        "n": a.n,
        "window": w,
        "mu_ref": mu,
        "interval": [lo, hi],
        "estimate": est,
        "krho": kr,
        "rhs": rhs,
        "ratio": rhs.map(|r| est.prob / r),
        "structured": extra,
    });
    print_json(&record)?;
    let out = run.output(&a.out, "estimate.json")?;
    write_json(&out, &record)?;
    run.finish(&[&out])
}

fn sweep(mut run: Run, a: &SweepArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let spec = run.scheme(&a.scheme)?;
    let w = window_of(&a.window, &spec)?;
    let kr = krho_for(&spec, &w)?;
    let centering = match a.window.centering {
        CenteringArg::FiniteN => Centering::FiniteN,
        CenteringArg::Limit => Centering::Limit,
        CenteringArg::Value(v) => Centering::Fixed(v),
    };
    let mut opts = SweepOptions::new(a.samples, a.seed);
    opts.exact = !a.no_exact;
    opts.structured_eps = a.eps.map(|e| eps_value(e, &w, &spec)).transpose()?;
    let rows = ratio_sweep(&spec, &w, &a.n, &kr, centering, &opts)?;
    for r in &rows {
        match &r.error {
            None => log::info!("n = {} [{}]: P = {:.4e} ± {:.1e}, ratio {:.4}", r.n, r.method, r.prob, r.std_error, r.ratio),
            Some(e) => log::warn!("n = {} [{}]: {e}", r.n, r.method),
        }
    }
    let out = run.output(&a.out, "ldp-sweep.csv")?;
    write_sweep_csv(&rows, &out)?;
    run.finish(&[&out])
}

fn condition(mut run: Run, a: &ConditionArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let spec = run.scheme(&a.scheme)?;
    let w = window_of(&a.window, &spec)?;
    let eps = eps_value(a.eps, &w, &spec)?;
    let level = spec.level(a.n)?;
    let mu = mu_ref(a.window.centering, &spec, a.n, 1_000_000, a.seed)?;
    let r = conditional_profiles(&level, &w, mu, eps, a.hits, a.max_samples, a.seed)?;
    let out = run.output(&a.out, "condition.jsonl")?;
    write_profiles_jsonl(&r.profiles, &out)?;
    let mut counts = std::collections::BTreeMap::new();
    for p in &r.profiles {
        *counts.entry(p.big_jumps.len()).or_insert(0u64) += 1;
    }
    let summary = json!({
        "n": a.n,
        "eps": eps,
        "mu_ref": mu,
        "hits": r.profiles.len(),
        "samples_used": r.samples_used,
        "target_reached": r.target_reached,
        "big_jump_counts": counts,
        "fraction_more_than_k": fraction_with_at_least(&r.profiles, w.k + 1),
        "gamma": a.gamma,
        "structure_fraction": a.gamma.map(|g| corollary1_fraction(&r.profiles, w.k, g, mu, w.rho)),
    });
    print_json(&summary)?;
    let mut summary_path = out.clone();
    summary_path.set_extension("summary.json");
    write_json(&summary_path, &summary)?;
    run.finish(&[&out, &summary_path])
}

fn read_profiles(path: &Path) -> Result<Vec<JumpProfile>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Config { line: i + 1, msg: e.to_string() }))
        .collect()
}

fn gof(mut run: Run, a: &GofArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let spec = run.scheme(&a.scheme)?;
    let h = spec.density()?;
    let k = k_for(a.rho, a.k);
    let kr = krho_eval_with(h.as_ref(), a.rho, k, 1e-10, &KrhoOptions::default())?;
    let profiles = match (&a.profiles, a.calibrate) {
        (Some(p), None) => read_profiles(p)?,
        (None, Some(count)) => {
            let sampler = LimitSampler::new(h.as_ref(), a.rho, k)?;
            profiles_from_limit(&sampler, h.as_ref(), 1 << 20, count, a.seed)
        }
        _ => unreachable!("clap enforces one input"),
    };
    let opts = GofOptions { bins: a.bins, seed: a.seed, include_atom: a.atom, rescale: a.rescale };
    let r = corollary2_gof(&profiles, h.as_ref(), a.rho, k, &kr, &opts)?;
    print_json(&json!({ "statistic": r.statistic, "dof": r.dof, "p_value": r.p_value, "used": r.used }))?;
    let out = run.output(&a.out, "gof.json")?;
    write_json(&out, &r)?;
    run.finish(&[&out])
}

fn graph_dir(run: &Run, dir: &Option<PathBuf>) -> PathBuf {
    dir.clone().unwrap_or_else(|| run.cli.out_dir.clone())
}

fn load_graph(dir: &Path) -> Result<DegreeSummary> {
    let s = DegreeSummary::read_csv(&dir.join(GRAPH_CSV))?;
    let outs: u64 = s.out_degrees.iter().sum();
    let ins: u64 = s.in_degrees.iter().sum();
    if outs != ins {
        return Err(Error::Domain(format!("degree file is inconsistent: out sum {outs} != in sum {ins}")));
    }
    Ok(s)
}

fn graph_gen(mut run: Run, a: &GraphGenArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let cfg = TorusConfig::new(a.d, a.half_width, a.beta, a.seed)?;
    let planted: Vec<(u64, f64)> = a.plant.iter().map(|p| (p.0, p.1)).collect();
    let limits = GraphLimits { max_vertices: a.max_vertices, max_visits: a.max_visits };
    let s = generate_graph_planted(&cfg, &planted, limits)?;
    let csv = run.cli.out_dir.join(GRAPH_CSV);
    s.write_csv(&csv)?;
    let record = json!({
        "config": cfg,
        "n": s.n(),
        "edge_count": s.edge_count,
        "rho_n": s.rho_n,
        "planted": planted,
    });
    print_json(&record)?;
    let meta = run.cli.out_dir.join(GRAPH_JSON);
    write_json(&meta, &record)?;
    run.finish(&[&csv, &meta])
}

fn graph_degrees(run: Run, a: &GraphDegreesArgs) -> Result<()> {
    let s = load_graph(&graph_dir(&run, &a.graph))?;
    let out = run.output(&Some(a.out.clone()), "")?;
    s.write_csv(&out)?;
    run.finish(&[&out])
}

fn graph_condense(run: Run, a: &GraphCondenseArgs) -> Result<()> {
    if !(a.eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let s = load_graph(&graph_dir(&run, &a.graph))?;
    let stats = condensation_stats(&s, a.k, a.eps);
    let record = json!({ "k": a.k, "eps": a.eps, "n": s.n(), "rho_n": s.rho_n, "stats": stats });
    print_json(&record)?;
    let out = run.output(&a.out, "condense.json")?;
    write_json(&out, &record)?;
    run.finish(&[&out])
}

fn calibrate(mut run: Run, a: &CalibrateArgs) -> Result<()> {
    run.seed = Some(a.seed);
    let r = calibrate_h(a.d, a.beta, &a.half_widths, &a.a, a.draws, a.seed)?;
    let out = run.output(&a.out, "calibrate-h.json")?;
    write_json(&out, &r)?;
    let mut csv_path = out.clone();
    csv_path.set_extension("csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(f, "N,n,a,draws,prob,std_error,exact_prob,scaled,scaled_se,target,z")?;
    for p in &r.points {
        writeln!(
            f,
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            p.half_width, p.n, p.a, p.draws, p.prob, p.std_error, p.exact_prob, p.scaled, p.scaled_se, p.target, p.z
        )?;
    }
    f.flush()?;
    drop(f);
    print_json(&json!({
        "measured_constant": r.measured_constant,
        "measured_se": r.measured_se,
        "analytic_constant": r.analytic_constant,
        "inverse_4d_constant": r.inverse_4d_constant,
    }))?;
    run.finish(&[&out, &csv_path])
}
