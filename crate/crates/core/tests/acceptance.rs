//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Criteria 6 to 8 share a full three-run sweep, which
//! dominates the runtime.

use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use statrs::function::erf::erf;

use kinlim::convergence_harness::{run_sweep, run_sweep_with, Progress, RateReport, Status, SweepPlan, SweepProfile};
use kinlim::kinetic_model::gas::PowerLaw;
use kinlim::kinetic_model::local::{self, Projector};
use kinlim::kinetic_model::poly::PolyM;
use kinlim::kinetic_model::{Conserved, GasModel, MacroState, VelocityGrid, VelocityMode};
use kinlim::kinetic_solver::{checkpoint, Solver};
use kinlim::profile_builder::oracle::standard_fluid_check;
use kinlim::profile_builder::{solve_theta_hat, SimilarityOptions};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

type Criterion = Result<Outcome, String>;

fn max_abs(c: &Conserved) -> f64 {
    c.as_array().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Two-bump state: a non-Maxwellian sum of two random Gaussians.
fn random_state(rng: &mut StdRng, grid: &VelocityGrid, gas: &GasModel) -> Vec<f64> {
    let bump = |rng: &mut StdRng, weight: f64| {
        let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let s = MacroState::new(weight * rng.gen_range(0.5..2.0), u, rng.gen_range(0.7..1.4));
        local::materialize(grid, &PolyM::maxwellian(s.gauss(gas, 0.2)))
    };
    let a = bump(rng, 1.0);
    let w = rng.gen_range(0.05..0.5);
    let b = bump(rng, w);
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}

fn grids(gas: &GasModel) -> Result<Vec<VelocityGrid>, String> {
    [(VelocityMode::Reduced, 64), (VelocityMode::Full3d, 24)]
        .into_iter()
        .map(|(m, n)| VelocityGrid::for_range(m, n, gas, 1.6, 0.4, 7.5).map_err(|e| e.to_string()))
        .collect()
}

fn conservation_and_entropy() -> Criterion {
    let mut rng = StdRng::seed_from_u64(1);
    let (mut worst_q, mut worst_relax, mut worst_h) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut count = 0;
    for gas in [GasModel::default(), GasModel::bgk()] {
        let bgk = gas.prandtl() == 1.0;
        for grid in grids(&gas)? {
            for _ in 0..25 {
                let f = random_state(&mut rng, &grid, &gas);
                let tg = local::target(&grid, &gas, &f, 0).map_err(|e| e.to_string())?;
                let scale = max_abs(&local::moments(&grid, &f));
                let q = local::collision(&grid, &gas, &f, 0).map_err(|e| e.to_string())?;
                worst_q = worst_q.max(max_abs(&local::moments(&grid, &q)) / (tg.nu * scale));
                let tau = rng.gen_range(1e-4..1e-1);
                let r = local::relax(&grid, &gas, 0.1, &f, tau, 0).map_err(|e| e.to_string())?;
                let d = local::moments(&grid, &r).add(&local::moments(&grid, &f).scale(-1.0));
                worst_relax = worst_relax.max(max_abs(&d) / scale);
                if bgk {
                    let h = local::entropy_production(&grid, &gas, &f, 0).map_err(|e| e.to_string())?;
                    worst_h = worst_h.max(h);
                }
                count += 1;
            }
        }
    }
    let passed = worst_q <= 1e-12 && worst_relax <= 1e-12 && worst_h <= 0.0;
    Ok(Outcome::new(
        passed,
        format!("{count} states: collision {worst_q:.2e}, relaxation step {worst_relax:.2e}, max BGK entropy production {worst_h:.3e}"),
    ))
}

fn projection_algebra() -> Criterion {
    let gas = GasModel::default();
    let mut rng = StdRng::seed_from_u64(2);
    let (mut idem, mut annihilate, mut psi, mut ortho) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for grid in grids(&gas)? {
        for _ in 0..10 {
            let s = MacroState::new(rng.gen_range(0.5..2.0), [rng.gen_range(-1.0..1.0), 0.0, 0.0], rng.gen_range(0.8..1.2));
            let (fit, _) = local::chi_basis(&grid, &gas, 0.2, &s).map_err(|e| e.to_string())?;
            let pr = Projector::new(&grid, fit).map_err(|e| e.to_string())?;
            let m = local::materialize(&grid, &PolyM::maxwellian(fit));
            // Node-wise random multiples of M: far from any polynomial times M.
            let h: Vec<f64> = m.iter().map(|v| v * rng.gen_range(-1.0..1.0)).collect();
            let scale = h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let (p0, p1) = pr.project(&grid, &h);
            let p0p0 = pr.p0(&grid, &p0);
            let p0p1 = pr.p0(&grid, &p1);
            for k in 0..h.len() {
                idem = idem.max((p0p0[k] - p0[k]).abs() / scale);
                annihilate = annihilate.max(p0p1[k].abs() / scale);
            }
            let habs: Vec<f64> = h.iter().map(|v| v.abs()).collect();
            let pm = local::poly_moments(&local::moments(&grid, &p1), fit.w);
            psi = psi.max(pm.iter().fold(0.0f64, |a, v| a.max(v.abs())) / max_abs(&local::moments(&grid, &habs)));
            if grid.mode == VelocityMode::Full3d {
                // ⟨P0 h, P1 h⟩ in L²(1/M) by direct tensor quadrature.
                let n = grid.n_nodes();
                let w = &grid.weights;
                let (mut dot, mut n0, mut n1) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let ix = (i * n + j) * n + k;
                            if m[ix] > 0.0 {
                                let ww = w[i] * w[j] * w[k] / m[ix];
                                dot += ww * p0[ix] * p1[ix];
                                n0 += ww * p0[ix] * p0[ix];
                                n1 += ww * p1[ix] * p1[ix];
                            }
                        }
                    }
                }
                ortho = ortho.max(dot.abs() / (n0 * n1).sqrt());
            }
        }
    }
    let passed = idem.max(annihilate).max(psi).max(ortho) <= 1e-8;
    Ok(Outcome::new(
        passed,
        format!("P0P0 - P0 {idem:.2e}, P0P1 {annihilate:.2e}, ψ-moments of P1 {psi:.2e}, cosine of P0h and P1h {ortho:.2e}"),
    ))
}

fn closed_form_profile() -> Criterion {
    let opts = SimilarityOptions::default();
    let mut worst = 0.0f64;
    let mut tail = 0.0f64;
    for a0 in [0.5, 1.0, 2.0] {
        let sim = solve_theta_hat(1.0, 1.1, PowerLaw::constant(a0), &opts).map_err(|e| e.to_string())?;
        for (i, th) in sim.theta_hat().iter().enumerate() {
            let want = 1.0 + 0.05 * (1.0 + erf(sim.eta(i) / (2.0 * a0.sqrt())));
            worst = worst.max((th - want).abs());
        }
        let (rm, rp) = sim.tail_rates().map_err(|e| e.to_string())?;
        let k = 1.0 / (4.0 * a0);
        tail = tail.max((rm / k - 1.0).abs()).max((rp / k - 1.0).abs());
    }
    let gas = GasModel::default();
    let sim = solve_theta_hat(1.0, 1.1, gas.a_law(), &opts).map_err(|e| e.to_string())?;
    let (rm, rp) = sim.tail_rates().map_err(|e| e.to_string())?;
    let law = ((rm * 4.0 * gas.a(1.0) - 1.0).abs()).max((rp * 4.0 * gas.a(1.1) - 1.0).abs());
    tail = tail.max(law);
    Ok(Outcome::new(
        worst <= 1e-6 && tail <= 0.05,
        format!("max |θ̂ - erf| {worst:.2e}; worst tail-rate mismatch {:.2}%", 100.0 * tail),
    ))
}

fn self_similarity() -> Criterion {
    let gas = GasModel::default();
    let sim = solve_theta_hat(1.0, 1.1, gas.a_law(), &SimilarityOptions::default()).map_err(|e| e.to_string())?;
    let r = standard_fluid_check(&sim).map_err(|e| e.to_string())?;
    Ok(Outcome::new(
        r.relative <= 1e-3,
        format!("sup deviation at T = {} is {:.2e} = {:.2e}·δ", r.t_end, r.sup_deviation, r.relative),
    ))
}

fn residual_orders() -> Criterion {
    let plan = SweepPlan::default();
    let profile = SweepProfile::build(&plan).map_err(|e| e.to_string())?;
    let rep = kinlim::profile_builder::ansatz::residual_sweep(&profile.base, &[0.1, 0.05, 0.025], &[1.0, 2.0, 4.0, 8.0, 16.0], 8.0, 201)
        .map_err(|e| e.to_string())?;
    let e: Vec<f64> = (0..4).map(|k| rep.min_eps_exponent(k)).collect();
    let t1 = rep.max_time_exponent(0);
    let passed = e[0] >= 1.8 && e[1..].iter().all(|v| *v >= 2.7) && t1 <= -0.8;
    let show = |v: f64| if v.is_infinite() { "vanishes".to_string() } else { format!("{v:.3}") };
    Ok(Outcome::new(
        passed,
        format!(
            "ε-exponents R1 {}, R2 {}, R3 {}, R4 {}; t-exponent of R1 {t1:.3}",
            show(e[0]),
            show(e[1]),
            show(e[2]),
            show(e[3])
        ),
    ))
}

fn from_checks(report: &RateReport, names: &[&str]) -> Criterion {
    let mut passed = true;
    let mut parts = Vec::new();
    for n in names {
        let c = report.check(n).ok_or_else(|| format!("check {n} missing from report"))?;
        passed &= c.status == Status::Pass;
        parts.push(format!("{n} {:?}: {}", c.status, c.detail));
    }
    Ok(Outcome::new(passed, parts.join("; ")))
}

fn reduced_plan() -> SweepPlan {
    SweepPlan {
        eps: vec![0.1, 0.05, 0.025],
        t_end: 0.25,
        output_every: 0.05,
        min_half_width: 4.0,
        diffusion_lengths: 1.0,
        ..SweepPlan::default()
    }
}

fn determinism() -> Criterion {
    let plan = reduced_plan();
    let a = serde_json::to_string(&run_sweep(&plan).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let b = serde_json::to_string(&run_sweep(&plan).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let repeat = a == b;

    let profile = SweepProfile::build(&plan).map_err(|e| e.to_string())?;
    let eps = 0.1;
    let mut cfg = plan.solver_config(eps).map_err(|e| e.to_string())?;
    cfg.t_end = 0.2;
    cfg.output_times = vec![0.1, 0.2];
    let solver = Solver::new(cfg).map_err(|e| e.to_string())?;
    let ans = profile.base.with_eps(eps).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("mid.klim");
    let mut straight = solver.init(&ans).map_err(|e| e.to_string())?;
    solver.advance_to(&mut straight, 0.1).map_err(|e| e.to_string())?;
    checkpoint::write(&path, &straight).map_err(|e| e.to_string())?;
    solver.run(&mut straight, |_| Ok(())).map_err(|e| e.to_string())?;
    let mut resumed = checkpoint::read(&path).map_err(|e| e.to_string())?;
    solver.run(&mut resumed, |_| Ok(())).map_err(|e| e.to_string())?;
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let restart = resumed == straight && bits(&resumed.field.data) == bits(&straight.field.data);
    Ok(Outcome::new(
        repeat && restart,
        format!(
            "repeated reduced sweep identical: {repeat} ({} bytes); restart at t = 0.1 identical at t = 0.2: {restart}",
            a.len()
        ),
    ))
}

fn report(n: usize, name: &str, result: Criterion, seconds: f64) -> bool {
    let (passed, detail) = match result {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {n} {} {name} [{seconds:.1} s]: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn timed(f: impl FnOnce() -> Criterion) -> (Criterion, f64) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let quick: [(usize, &str, fn() -> Criterion); 5] = [
        (1, "conservation and H-theorem", conservation_and_entropy),
        (2, "projection algebra", projection_algebra),
        (3, "closed-form profile", closed_form_profile),
        (4, "self-similarity oracle", self_similarity),
        (5, "residual orders", residual_orders),
    ];
    let mut all = true;
    for (n, name, f) in quick {
        let (r, s) = timed(f);
        all &= report(n, name, r, s);
    }

    let start = Instant::now();
    let plan = SweepPlan::default();
    let sweep = run_sweep_with(&plan, &|p| {
        if let Progress::Finished { eps, wall_seconds, .. } = p {
            eprintln!("sweep run ε = {eps} finished in {wall_seconds:.0} s");
        }
    });
    let sweep_s = start.elapsed().as_secs_f64();
    eprintln!("full sweep took {sweep_s:.0} s");
    let groups: [(usize, &str, &[&str]); 3] = [
        (6, "diffusion-limit convergence", &["eps_rate_e_macro", "e_u_decreasing"]),
        (7, "temporal decay", &["decay_macro_l2_sq", "decay_micro_l2_sq"]),
        (8, "flow induction", &["flow_induction"]),
    ];
    for (n, name, checks) in groups {
        let r = match &sweep {
            Ok(rep) => from_checks(rep, checks),
            Err(e) => Err(e.to_string()),
        };
        let s = if n == 6 { sweep_s } else { 0.0 };
        all &= report(n, name, r, s);
    }

    let (r, s) = timed(determinism);
    all &= report(9, "determinism and restart", r, s);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
