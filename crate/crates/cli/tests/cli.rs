use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn kinlim(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinlim"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("KINLIM_OUT")
        .output()
        .expect("binary runs")
}

fn last_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stdout);
    let line = text.lines().last().unwrap_or_else(|| panic!("no stdout; stderr: {}", String::from_utf8_lossy(&o.stderr)));
    serde_json::from_str(line).expect("last stdout line is JSON")
}

fn run_dir(o: &Output) -> PathBuf {
    PathBuf::from(last_json(o)["dir"].as_str().expect("dir reported"))
}

/// Uniform far fields on a small domain: cheap solver runs.
const SMALL: [&str; 10] = [
    "--set",
    "solver.t_end=0.2",
    "--set",
    "solver.output_every=0.1",
    "--set",
    "solver.min_half_width=3",
    "--set",
    "solver.diffusion_lengths=1",
    "--set",
    "solver.eps=0.1",
];

#[test]
fn synthetic_sweep_passes_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kinlim(tmp.path(), &["sweep", "--synthetic"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j = last_json(&o);
    assert_eq!(j["status"], "ok");
    let dir = run_dir(&o);
    for f in ["config.toml", "manifest.json", "report.csv", "summary.json", "rate_report.json", "eps_rates.svg", "temporal_decay.svg"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["exit_code"], 0);
    let csv = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    assert!(csv.starts_with("quantity,eps,t,value"));

    let p = kinlim(tmp.path(), &["plot", dir.to_str().unwrap()]);
    assert_eq!(p.status.code(), Some(0), "{}", String::from_utf8_lossy(&p.stderr));
    assert!(run_dir(&p).join("eps_rates.svg").exists());
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    for set in ["solver.eps=\"oops\"", "solver.nonsense=1", "solver.eps=-0.1", "profile.theta_minus=0"] {
        let o = kinlim(tmp.path(), &["check", "--set", set]);
        assert_eq!(o.status.code(), Some(2), "{set}");
        let j = last_json(&o);
        assert_eq!(j["exit_code"], 2, "{set}");
        assert_eq!(j["error"]["kind"], "config", "{set}");
    }
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[solver]\nepsilon = 0.1\n").unwrap();
    let o = kinlim(tmp.path(), &["--config", cfg.to_str().unwrap(), "check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "[profile]\ntheta_minus = 1.0\ntheta_plus = 1.2\n").unwrap();
    let o = kinlim(tmp.path(), &["--config", cfg.to_str().unwrap(), "check", "--set", "profile.theta_plus=1.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(run_dir(&o).join("config.toml")).unwrap();
    let v: toml::Table = text.parse().unwrap();
    assert_eq!(v["profile"]["theta_minus"].as_float(), Some(1.0));
    assert_eq!(v["profile"]["theta_plus"].as_float(), Some(1.05));
}

#[test]
fn check_passes_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kinlim(tmp.path(), &["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let j: Value = serde_json::from_str(&std::fs::read_to_string(run_dir(&o).join("check.json")).unwrap()).unwrap();
    assert_eq!(j["passed"], true);
}

#[test]
fn equal_far_fields_give_a_flat_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kinlim(tmp.path(), &["profile", "--set", "profile.theta_minus=1.0", "--set", "profile.theta_plus=1.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = run_dir(&o);
    let mut r = csv::Reader::from_path(dir.join("profile.csv")).unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[1].parse::<f64>().unwrap(), 1.0);
        for k in 2..7 {
            assert_eq!(rec[k].parse::<f64>().unwrap(), 0.0, "column {k}");
        }
    }
    assert!(dir.join("residuals.json").exists());
    assert!(dir.join("ansatz.csv").exists());
}

#[test]
fn uniform_state_gives_constant_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--set", "profile.theta_minus=1.0", "--set", "profile.theta_plus=1.0"];
    args.extend(SMALL);
    let o = kinlim(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(run_dir(&o).join("diagnostics.csv")).unwrap();
    let rows: Vec<Vec<String>> = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        assert_eq!(row[1..], rows[0][1..]);
    }
}

#[test]
fn restart_continues_bit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--set", "solver.checkpoint_times=[0.1, 0.2]"];
    args.extend(SMALL);
    let o = kinlim(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = run_dir(&o);
    let mid = first.join("checkpoint_t0.1.klim");
    assert!(mid.exists());

    let mut args = vec!["simulate", "--set", "solver.checkpoint_times=[0.2]"];
    args.extend(SMALL);
    args.extend(["--resume", mid.to_str().unwrap()]);
    let o = kinlim(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let second = run_dir(&o);
    let a = std::fs::read(first.join("checkpoint_t0.2.klim")).unwrap();
    let b = std::fs::read(second.join("checkpoint_t0.2.klim")).unwrap();
    assert!(a == b, "continued state differs");
}

#[test]
fn resume_with_mismatched_grid_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--set", "solver.checkpoint_times=[0.1]"];
    args.extend(SMALL);
    let o = kinlim(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    let mid = run_dir(&o).join("checkpoint_t0.1.klim");
    let mut args: Vec<&str> = vec!["simulate", "--set", "solver.dx_over_eps=0.2"];
    args.extend(SMALL);
    args.extend(["--resume", mid.to_str().unwrap()]);
    let o = kinlim(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(run_dir(&o).join("error.json").exists());
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kinlim"))
        .args(["sweep", "--synthetic"])
        .env("KINLIM_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(run_dir(&o).starts_with(tmp.path()));
}

#[test]
fn plot_of_an_empty_directory_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = kinlim(tmp.path(), &["plot", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
