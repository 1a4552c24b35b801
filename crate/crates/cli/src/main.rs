//! `kinlim`: build diffusion-wave profiles, run the kinetic solver, and
//! verify convergence rates.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use artifacts::{output_root, RunDir};
use commands::{Failure, Outcome};
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "kinlim", version, about = "Diffusion-wave profiles and kinetic convergence sweeps")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set solver.eps=0.05`.
    #[arg(long = "set", global = true, value_name = "K=V")]
    set: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Output root (overrides KINLIM_OUT and the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and write the similarity profile, corrections, ansatz and residuals.
    Profile {
        /// Also evolve the profile under the nonlinear diffusion equation.
        #[arg(long)]
        check: bool,
    },
    /// Run the kinetic solver at `solver.eps`.
    Simulate {
        /// Continue from a checkpoint instead of the ansatz data.
        #[arg(long, value_name = "PATH")]
        resume: Option<PathBuf>,
    },
    /// Run the ε sweep and fit rates.
    Sweep {
        /// Fit injected power laws instead of running the solver.
        #[arg(long)]
        synthetic: bool,
        /// Half width in η of the flow-induction region.
        #[arg(long, value_name = "X")]
        eta0: Option<f64>,
    },
    /// Fast self-checks of the configuration's grids and profile.
    Check,
    /// Redraw plots from an earlier sweep or simulate directory.
    Plot {
        #[arg(value_name = "DIR")]
        source: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Profile { .. } => "profile",
            Command::Simulate { .. } => "simulate",
            Command::Sweep { .. } => "sweep",
            Command::Check => "check",
            Command::Plot { .. } => "plot",
        }
    }
}

fn execute(cli: &Cli, dir_slot: &mut Option<RunDir>) -> Result<Outcome, Failure> {
    let mut sets = cli.set.clone();
    if let Command::Sweep { eta0: Some(x), .. } = &cli.command {
        sets.push(format!("sweep.eta0={x}"));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &sets)?;
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure { code: commands::EXIT_CONFIG, kind: "config", message: e.to_string() })?;
    }
    let root = output_root(cli.out.as_deref(), cfg.output.directory.as_deref());
    let dir = dir_slot.insert(RunDir::create(&root, cli.command.name(), cfg.canonical())?);
    dir.write("config.toml", cfg.canonical())?;
    match &cli.command {
        Command::Profile { check } => commands::profile(&cfg, dir, *check),
        Command::Simulate { resume } => commands::simulate(&cfg, dir, resume.as_deref()),
        Command::Sweep { synthetic, .. } => commands::sweep(&cfg, dir, *synthetic),
        Command::Check => commands::check(&cfg, dir),
        Command::Plot { source } => commands::plot(source, dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut dir = None;
    let result = execute(&cli, &mut dir);
    let (code, line) = match result {
        Ok(o) => {
            let dir_s = dir.as_ref().map(|d| d.path.display().to_string());
            if let Some(d) = dir.as_mut() {
                let _ = d.finish(o.code, o.summary.clone());
            }
            (o.code, json!({ "status": if o.code == 0 { "ok" } else { "acceptance_failed" }, "dir": dir_s, "summary": o.summary }))
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            let mut j = f.to_json();
            if let Some(d) = dir.as_mut() {
                j["dir"] = json!(d.path.display().to_string());
                let _ = d.write_json("error.json", &f.to_json());
                let _ = d.finish(f.code, f.to_json());
            }
            (f.code, j)
        }
    };
    println!("{line}");
    ExitCode::from(code as u8)
}
