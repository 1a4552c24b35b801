//! The subcommands. Each returns an outcome (exit code 0 or 4) or a failure.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use kinlim::convergence_harness::output::{loglog_svg, report_plots, summary_json, write_report_csv, Series};
use kinlim::convergence_harness::{micro_macro_report, run_sweep_with, synthetic_report, FrameSummary, Progress, RateReport, SweepProfile};
use kinlim::kinetic_solver::diagnostics::{diagnostics, write_csv};
use kinlim::kinetic_solver::{checkpoint, Reference, Solver};
use kinlim::profile_builder::ansatz::{residual_sweep, similarity_lattice};
use kinlim::profile_builder::io::write_profile_csv;
use kinlim::profile_builder::oracle::standard_fluid_check;
use kinlim::profile_builder::build_profile;

use crate::artifacts::RunDir;
use crate::config::{ConfigError, Format, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind, "message": self.message }, "exit_code": self.code })
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self { code: EXIT_CONFIG, kind: "config", message: e.to_string() }
    }
}

impl From<kinlim::Error> for Failure {
    fn from(e: kinlim::Error) -> Self {
        use kinlim::Error as E;
        let (code, kind) = match &e {
            E::Config(_) | E::GridMismatch(_) => (EXIT_CONFIG, "config"),
            E::Io(_) | E::Csv(_) | E::Checkpoint(_) => (EXIT_NUMERICAL, "io"),
            _ => (EXIT_NUMERICAL, "numerical"),
        };
        Self { code, kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_NUMERICAL, kind: "io", message: e.to_string() }
    }
}

pub struct Outcome {
    pub code: i32,
    pub summary: Value,
}

pub fn profile(cfg: &RunConfig, dir: &mut RunDir, check: bool) -> Result<Outcome, Failure> {
    let plan = cfg.simulate_plan();
    let (sim, corr) = build_profile(&cfg.profile, &cfg.gas, &plan.velocity_grid()?)?;
    let invariants = sim.check_invariants();
    write_profile_csv(BufWriter::new(File::create(dir.file("profile.csv"))?), &sim, &corr)?;
    dir.write_json("similarity.json", &sim)?;
    dir.write_json("corrections.json", &corr)?;

    let base = kinlim::profile_builder::ansatz::AnsatzProfile::new(sim.clone(), corr, cfg.gas, cfg.solver.eps)?;
    let times = [0.0, 1.0, 2.0, 4.0, 8.0];
    let mut w = csv::Writer::from_path(dir.file("ansatz.csv")).map_err(kinlim::Error::from)?;
    w.write_record(["t", "x", "v", "u1", "u2", "u3", "theta"]).map_err(kinlim::Error::from)?;
    for &t in &times {
        for s in base.fields(&similarity_lattice(t, 8.0, 401), t)? {
            let row = [t, s.x, s.v[0], s.u[0][0], s.u[1][0], s.u[2][0], s.theta[0]];
            w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(kinlim::Error::from)?;
        }
    }
    w.flush()?;

    let residuals = residual_sweep(&base, &cfg.sweep.eps, &[1.0, 2.0, 4.0, 8.0, 16.0], 8.0, 201)?;
    dir.write_json("residuals.json", &residuals)?;

    let a = cfg.gas.a_law();
    let tails = sim.tail_rates().ok().map(|(l, r)| {
        json!({
            "fitted": [l, r],
            "predicted": [1.0 / (4.0 * a.value(sim.theta_minus)), 1.0 / (4.0 * a.value(sim.theta_plus))],
        })
    });
    let oracle = if check { Some(standard_fluid_check(&sim)?) } else { None };
    let summary = json!({
        "delta": sim.delta,
        "bvp_residual": sim.residual,
        "invariants_ok": invariants.is_ok(),
        "invariant_error": invariants.as_ref().err().map(|e| e.to_string()),
        "tail_rates": tails,
        "residual_exponents": {
            "eps_min": (0..4).map(|k| residuals.min_eps_exponent(k)).collect::<Vec<_>>(),
            "time_max": (0..4).map(|k| residuals.max_time_exponent(k)).collect::<Vec<_>>(),
        },
        "oracle": oracle,
    });
    dir.write_json("profile_summary.json", &summary)?;
    match invariants {
        Ok(()) => Ok(Outcome { code: EXIT_OK, summary }),
        Err(e) => Err(e.into()),
    }
}

pub fn simulate(cfg: &RunConfig, dir: &mut RunDir, resume: Option<&Path>) -> Result<Outcome, Failure> {
    let start = Instant::now();
    let mut scfg = cfg.simulate_config()?;
    scfg.dump_dir = Some(dir.path.clone());
    let plan = cfg.simulate_plan();
    let profile = SweepProfile::build(&plan)?;
    let ans = profile.base.with_eps(cfg.solver.eps)?;
    let reference = Reference::new(ans.clone())?;
    let solver = Solver::new(scfg)?;
    let mut state = match resume {
        Some(p) => {
            let st = checkpoint::read(p)?;
            solver.check_field(&st.field)?;
            st
        }
        None => solver.init(&ans)?,
    };
    let mut frames = Vec::new();
    if resume.is_none() {
        frames.push(diagnostics(&state, &solver.config, Some(&reference))?);
    }
    let ckpt_times = cfg.solver.checkpoint_times.clone();
    let mut written: Vec<PathBuf> = Vec::new();
    solver.run(&mut state, |s| {
        let d = diagnostics(s, &solver.config, Some(&reference))?;
        eprintln!("t = {:.4}  steps = {}  e_macro = {:.4e}", s.time, s.steps, d.e_macro.unwrap_or(f64::NAN));
        frames.push(d);
        if ckpt_times.iter().any(|t| *t == s.time) {
            let p = dir.file(&format!("checkpoint_t{}.klim", s.time));
            checkpoint::write(&p, s)?;
            written.push(p);
        }
        Ok(())
    })?;
    write_csv(&dir.file("diagnostics.csv"), &frames)?;
    let summaries: Vec<FrameSummary> = frames.iter().map(FrameSummary::from_frame).collect();
    micro_macro_report(&summaries, 1.0).write_csv(File::create(dir.file("micro_macro.csv"))?)?;
    let summary = json!({
        "eps": cfg.solver.eps,
        "nx": solver.config.xgrid.n,
        "dt": solver.config.dt_max(),
        "steps": state.steps,
        "t_final": state.time,
        "mass_drift": state.mass_drift(),
        "conservation_drift": state.conservation_drift(),
        "resumed_from": resume.map(|p| p.display().to_string()),
        "checkpoints": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "wall_seconds": start.elapsed().as_secs_f64(),
    });
    dir.write_json("simulate.json", &summary)?;
    Ok(Outcome { code: EXIT_OK, summary })
}

fn write_report(cfg: &RunConfig, dir: &mut RunDir, prefix: &str, report: &RateReport) -> Result<(), Failure> {
    if cfg.output.wants(Format::Csv) {
        write_report_csv(BufWriter::new(File::create(dir.file(&format!("{prefix}report.csv")))?), report)?;
        for r in report.runs.iter().filter(|r| r.ok()) {
            let tab = micro_macro_report(&r.frames, report.plan.decay_window[0]);
            tab.write_csv(File::create(dir.file(&format!("{prefix}micro_macro_eps{}.csv", r.eps)))?)?;
        }
    }
    if cfg.output.wants(Format::Json) {
        dir.write(&format!("{prefix}summary.json"), summary_json(report)? + "\n")?;
        dir.write_json(&format!("{prefix}rate_report.json"), report)?;
    }
    if cfg.output.wants(Format::Svg) {
        for (name, svg) in report_plots(report) {
            dir.write(&format!("{prefix}{name}"), svg)?;
        }
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, dir: &mut RunDir, synthetic: bool) -> Result<Outcome, Failure> {
    let plans = cfg.sweep_plans();
    let many = plans.len() > 1;
    let mut results = Vec::new();
    let mut all_passed = true;
    for plan in &plans {
        let t0 = Instant::now();
        let observe = |p: &Progress| match p {
            Progress::Started { eps, nx, steps_per_unit_time } => {
                eprintln!("[{:>8.1}s] ε = {eps}: {nx} cells, {steps_per_unit_time:.0} steps per unit time", t0.elapsed().as_secs_f64())
            }
            Progress::Frame { eps, t, e_macro } => {
                eprintln!("[{:>8.1}s] ε = {eps}: t = {t}, e_macro = {e_macro:.4e}", t0.elapsed().as_secs_f64())
            }
            Progress::Finished { eps, steps, wall_seconds } => {
                eprintln!("[{:>8.1}s] ε = {eps}: done, {steps} steps in {wall_seconds:.1}s", t0.elapsed().as_secs_f64())
            }
            Progress::Failed { eps, error } => eprintln!("[{:>8.1}s] ε = {eps}: FAILED: {error}", t0.elapsed().as_secs_f64()),
        };
        let report = if synthetic { synthetic_report(plan)? } else { run_sweep_with(plan, &observe)? };
        let prefix = if many { format!("delta{}_", plan.delta()) } else { String::new() };
        write_report(cfg, dir, &prefix, &report)?;
        for c in &report.checks {
            eprintln!("{:<20} {:<12} {}", c.name, format!("{:?}", c.status).to_lowercase(), c.detail);
        }
        all_passed &= report.passed();
        results.push(json!({
            "delta": plan.delta(),
            "passed": report.passed(),
            "checks": report.checks,
        }));
    }
    let summary = json!({ "synthetic": synthetic, "passed": all_passed, "sweeps": results });
    Ok(Outcome { code: if all_passed { EXIT_OK } else { EXIT_ACCEPTANCE }, summary })
}

/// Quadrature self-test, profile invariants, tail rates and the fluid oracle.
pub fn check(cfg: &RunConfig, dir: &mut RunDir) -> Result<Outcome, Failure> {
    let plan = cfg.simulate_plan();
    let vgrid = plan.velocity_grid()?;
    let (lo, hi) = (cfg.profile.theta_minus.min(cfg.profile.theta_plus), plan.theta_max());
    let mut checks = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| checks.push(json!({ "name": name, "passed": ok, "detail": detail }));

    let q = vgrid.self_test(&cfg.gas, 0.9 * lo, hi);
    push("velocity_quadrature", q.is_ok(), format!("moment error {:.3e}", vgrid.moment_error(&cfg.gas, &[0.9 * lo, hi])));
    let (sim, _) = build_profile(&cfg.profile, &cfg.gas, &vgrid)?;
    let inv = sim.check_invariants();
    push("profile_invariants", inv.is_ok(), inv.err().map_or_else(|| format!("BVP residual {:.3e}", sim.residual), |e| e.to_string()));
    if !sim.is_constant() {
        let a = cfg.gas.a_law();
        let (l, r) = sim.tail_rates()?;
        let (pl, pr) = (1.0 / (4.0 * a.value(sim.theta_minus)), 1.0 / (4.0 * a.value(sim.theta_plus)));
        let dev = ((l - pl) / pl).abs().max(((r - pr) / pr).abs());
        push("tail_rates", dev <= 0.05, format!("fitted ({l:.4}, {r:.4}) against ({pl:.4}, {pr:.4})"));
        let o = standard_fluid_check(&sim)?;
        push("self_similarity_oracle", o.relative <= 1e-3, format!("sup deviation {:.3e} = {:.3e} δ at T = {}", o.sup_deviation, o.relative, o.t_end));
    }
    let passed = checks.iter().all(|c| c["passed"] == Value::Bool(true));
    let summary = json!({ "passed": passed, "checks": checks });
    dir.write_json("check.json", &summary)?;
    Ok(Outcome { code: if passed { EXIT_OK } else { EXIT_ACCEPTANCE }, summary })
}

/// Redraws plots of an existing sweep or simulate directory.
pub fn plot(source: &Path, dir: &mut RunDir) -> Result<Outcome, Failure> {
    let mut drawn = Vec::new();
    let mut reports: Vec<PathBuf> = std::fs::read_dir(source)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("rate_report.json")))
        .collect();
    reports.sort();
    for p in reports {
        let text = std::fs::read_to_string(&p)?;
        let report: RateReport = serde_json::from_str(&text)
            .map_err(|e| Failure { code: EXIT_CONFIG, kind: "input", message: format!("{}: {e}", p.display()) })?;
        let prefix = p.file_name().and_then(|n| n.to_str()).map_or("", |n| n.trim_end_matches("rate_report.json")).to_string();
        for (name, svg) in report_plots(&report) {
            let name = format!("{prefix}{name}");
            dir.write(&name, svg)?;
            drawn.push(name);
        }
    }
    let diag = source.join("diagnostics.csv");
    if diag.exists() {
        let mut r = csv::Reader::from_path(&diag).map_err(kinlim::Error::from)?;
        let (mut mac, mut mic) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec.map_err(kinlim::Error::from)?;
            let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect();
            if v[0] > 0.0 {
                mac.push((1.0 + v[0], v[2] * v[2]));
                mic.push((1.0 + v[0], v[5] * v[5]));
            }
        }
        let series = [Series { name: "macro L²".into(), points: mac }, Series { name: "micro L²".into(), points: mic }];
        dir.write("decay.svg", loglog_svg("squared norms against 1+t", "1 + t", "norm²", &series))?;
        drawn.push("decay.svg".into());
    }
    if drawn.is_empty() {
        return Err(Failure {
            code: EXIT_CONFIG,
            kind: "input",
            message: format!("{} holds neither a rate report nor diagnostics", source.display()),
        });
    }
    Ok(Outcome { code: EXIT_OK, summary: json!({ "plots": drawn }) })
}
