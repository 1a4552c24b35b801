//! End-to-end runs through the public API: profile, ansatz, solver and
//! harness output.

use kinlim::convergence_harness::output::{report_plots, summary_json, write_report_csv, REPORT_HEADER};
use kinlim::convergence_harness::{run_single, synthetic_report, SweepPlan, SweepProfile};
use kinlim::kinetic_model::GasModel;
use kinlim::kinetic_solver::diagnostics::diagnostics;
use kinlim::kinetic_solver::{Reference, Solver};
use kinlim::profile_builder::io::{read_profile_csv, write_profile_csv};
use kinlim::profile_builder::{build_profile, ProfileSpec};
use kinlim::tolerances;

fn short_plan() -> SweepPlan {
    SweepPlan { t_end: 0.5, output_every: 0.25, min_half_width: 6.0, diffusion_lengths: 1.0, ..SweepPlan::default() }
}

#[test]
fn short_kinetic_run_tracks_the_ansatz_and_conserves() {
    let plan = short_plan();
    let profile = SweepProfile::build(&plan).unwrap();
    let eps = 0.1;
    let ans = profile.base.with_eps(eps).unwrap();
    let reference = Reference::new(ans.clone()).unwrap();
    let solver = Solver::new(plan.solver_config(eps).unwrap()).unwrap();
    let mut state = solver.init(&ans).unwrap();
    let mut frames = Vec::new();
    solver
        .run(&mut state, |s| {
            frames.push(diagnostics(s, &solver.config, Some(&reference))?);
            Ok(())
        })
        .unwrap();
    assert_eq!(frames.len(), 2);
    assert_eq!(state.time, 0.5);
    assert!(state.conservation_drift() <= tolerances::SOLVER_DRIFT_REL, "{}", state.conservation_drift());
    state.field.check_nonnegative(tolerances::NEG_TOL_REL).unwrap();
    for f in &frames {
        // Far below the O(ε) size of the microscopic part, which is itself
        // far below the wave amplitude δ = 0.1.
        let e = f.e_macro.unwrap();
        assert!(e < 1e-3, "t = {}: e_macro = {e}", f.t);
        assert!(f.l2_micro < f.l2_micro_full, "{} vs {}", f.l2_micro, f.l2_micro_full);
    }
}

#[test]
fn single_run_record_matches_its_frames() {
    let plan = SweepPlan { t_end: 0.2, output_every: 0.1, min_half_width: 4.0, ..short_plan() };
    let profile = SweepProfile::build(&plan).unwrap();
    let (rec, frames) = run_single(&plan, &profile, 0.1, &|_| {});
    assert!(rec.ok(), "{:?}", rec.error);
    assert_eq!(rec.frames.len(), frames.len());
    assert_eq!(rec.frames.len(), 3);
    assert_eq!(rec.frame_at(0.1).unwrap().e_macro, frames[1].e_macro.unwrap());
    let flow = rec.flow.as_ref().unwrap();
    assert!(flow.c > 0.0 && flow.cap_c.is_finite(), "{flow:?}");
}

#[test]
fn profile_csv_round_trips() {
    let gas = GasModel::default();
    let plan = SweepPlan::default();
    let (sim, corr) = build_profile(&ProfileSpec::default(), &gas, &plan.velocity_grid().unwrap()).unwrap();
    let mut buf = Vec::new();
    write_profile_csv(&mut buf, &sim, &corr).unwrap();
    let rows = read_profile_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), sim.n_nodes());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.eta, sim.eta(i));
        assert_eq!(r.theta_hat, sim.theta_hat()[i]);
    }
}

#[test]
fn synthetic_report_artifacts_are_consistent() {
    let report = synthetic_report(&SweepPlan::default()).unwrap();
    let mut buf = Vec::new();
    write_report_csv(&mut buf, &report).unwrap();
    let mut r = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), REPORT_HEADER);
    let mut e_macro_at_4 = Vec::new();
    for rec in r.records() {
        let rec = rec.unwrap();
        if &rec[0] == "e_macro" && rec[2].parse::<f64>().unwrap() == 4.0 {
            e_macro_at_4.push((rec[1].parse::<f64>().unwrap(), rec[3].parse::<f64>().unwrap()));
        }
    }
    assert_eq!(e_macro_at_4.len(), 3);
    for (eps, v) in e_macro_at_4 {
        let want = 3.0 * eps * eps / 5f64.sqrt();
        assert!((v / want - 1.0).abs() < 1e-12, "{eps}: {v} vs {want}");
    }
    let summary: serde_json::Value = serde_json::from_str(&summary_json(&report).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    for (_, svg) in report_plots(&report) {
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
