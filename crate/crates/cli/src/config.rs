//! Run configuration: one TOML file, overridable by `--set key=value`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use kinlim::convergence_harness::{Bands, SweepPlan};
use kinlim::kinetic_model::gas::GasModel;
use kinlim::kinetic_solver::{Scheme, SolverConfig, SpatialOrder};
use kinlim::profile_builder::ProfileSpec;
use kinlim::tolerances;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("bad --set {0:?}: expected key=value")]
    Set(String),
    #[error(transparent)]
    Invalid(#[from] kinlim::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub eps: f64,
    pub t_end: f64,
    pub output_every: f64,
    pub dx_over_eps: f64,
    pub n_velocity: usize,
    pub cutoff_factor: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub order: SpatialOrder,
    pub min_half_width: f64,
    pub diffusion_lengths: f64,
    pub collisions: bool,
    /// Times at which `simulate` writes checkpoints.
    pub checkpoint_times: Vec<f64>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let p = SweepPlan::default();
        Self {
            eps: 0.1,
            t_end: p.t_end,
            output_every: p.output_every,
            dx_over_eps: p.dx_over_eps,
            n_velocity: p.n_velocity,
            cutoff_factor: p.cutoff_factor,
            cfl: p.cfl,
            scheme: p.scheme,
            order: p.order,
            min_half_width: p.min_half_width,
            diffusion_lengths: p.diffusion_lengths,
            collisions: true,
            checkpoint_times: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub eps: Vec<f64>,
    /// Far-field gaps `θ+ - θ-`; empty means the profile block's `θ+`.
    pub delta: Vec<f64>,
    pub fit_time: f64,
    pub decay_eps: f64,
    pub decay_window: [f64; 2],
    pub flow_eps: f64,
    pub eta0: f64,
    pub bands: Bands,
}

impl Default for SweepBlock {
    fn default() -> Self {
        let p = SweepPlan::default();
        Self {
            eps: p.eps,
            delta: Vec::new(),
            fit_time: p.fit_time,
            decay_eps: p.decay_eps,
            decay_window: p.decay_window,
            flow_eps: p.flow_eps,
            eta0: p.eta0,
            bands: p.bands,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// Output root; `--out` and `KINLIM_OUT` take precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: None, formats: vec![Format::Csv, Format::Json, Format::Svg] }
    }
}

impl OutputBlock {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub gas: GasModel,
    pub profile: ProfileSpec,
    pub solver: SolverBlock,
    pub sweep: SweepBlock,
    pub output: OutputBlock,
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a
/// bare string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn apply_set(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| ConfigError::Set(assignment.into()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Set(assignment.into()));
    }
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        let entry = node.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| ConfigError::Parse(format!("--set {key}: {p} is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Parses `text` with the `--set` overrides applied, then validates.
    pub fn parse(text: &str, sets: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for s in sets {
            apply_set(&mut table, s)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&std::path::Path>, sets: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?,
            None => String::new(),
        };
        Self::parse(&text, sets)
    }

    /// Canonical TOML: every field explicit, fixed key order.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration is serializable")
    }

    pub fn validate(&self) -> kinlim::Result<()> {
        self.gas.validate()?;
        for plan in self.sweep_plans() {
            plan.validate()?;
        }
        let single = self.plan_with(self.profile.clone(), vec![self.solver.eps]);
        single.solver_config(self.solver.eps)?.validate()?;
        let bad = self.solver.checkpoint_times.iter().find(|t| !(**t > 0.0 && **t <= self.solver.t_end));
        if let Some(t) = bad {
            return Err(kinlim::Error::Config(format!("checkpoint time {t} outside (0, t_end]")));
        }
        if self.sweep.delta.iter().any(|d| !(self.profile.theta_minus + d > 0.0)) {
            return Err(kinlim::Error::Config("θ- + δ must stay positive".into()));
        }
        if self.solver.cutoff_factor < tolerances::MIN_CUTOFF_FACTOR {
            return Err(kinlim::Error::Config(format!("cutoff factor below {}", tolerances::MIN_CUTOFF_FACTOR)));
        }
        Ok(())
    }

    fn plan_with(&self, profile: ProfileSpec, eps: Vec<f64>) -> SweepPlan {
        let (s, w) = (&self.solver, &self.sweep);
        SweepPlan {
            eps,
            profile,
            gas: self.gas,
            t_end: s.t_end,
            output_every: s.output_every,
            dx_over_eps: s.dx_over_eps,
            n_velocity: s.n_velocity,
            cutoff_factor: s.cutoff_factor,
            cfl: s.cfl,
            scheme: s.scheme,
            order: s.order,
            min_half_width: s.min_half_width,
            diffusion_lengths: s.diffusion_lengths,
            fit_time: w.fit_time,
            decay_eps: w.decay_eps,
            decay_window: w.decay_window,
            flow_eps: w.flow_eps,
            eta0: w.eta0,
            bands: w.bands,
        }
    }

    /// One sweep plan per δ in the sweep block.
    pub fn sweep_plans(&self) -> Vec<SweepPlan> {
        if self.sweep.delta.is_empty() {
            return vec![self.plan_with(self.profile.clone(), self.sweep.eps.clone())];
        }
        self.sweep
            .delta
            .iter()
            .map(|d| {
                let profile = ProfileSpec { theta_plus: self.profile.theta_minus + d, ..self.profile.clone() };
                self.plan_with(profile, self.sweep.eps.clone())
            })
            .collect()
    }

    /// Solver configuration of the single-ε `simulate` run; checkpoint times
    /// are added to the output times.
    pub fn simulate_config(&self) -> kinlim::Result<SolverConfig> {
        let plan = self.plan_with(self.profile.clone(), vec![self.solver.eps]);
        let mut cfg = plan.solver_config(self.solver.eps)?;
        cfg.collisions = self.solver.collisions;
        cfg.output_times.extend(&self.solver.checkpoint_times);
        cfg.output_times.sort_by(f64::total_cmp);
        cfg.output_times.dedup();
        Ok(cfg)
    }

    pub fn simulate_plan(&self) -> SweepPlan {
        self.plan_with(self.profile.clone(), vec![self.solver.eps])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        let c = RunConfig::parse("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.sweep_plans(), vec![SweepPlan::default()]);
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = "[solver]\neps = 0.05\nscheme = \"split1\"\norder = \"1\"\n[sweep]\ndelta = [0.1, 0.2]\n";
        let c = RunConfig::parse(text, &[]).unwrap();
        let canon = c.canonical();
        let back = RunConfig::parse(&canon, &[]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.canonical(), canon);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse("[solver]\nepsilon = 0.1\n", &[]), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::parse("[bogus]\n", &[]), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn set_overrides_nested_keys() {
        let sets = vec![
            "solver.eps=0.025".to_string(),
            "profile.theta_plus = 1.2".to_string(),
            "gas.prandtl_mode=bgk".to_string(),
            "sweep.eps=[0.2, 0.1, 0.05]".to_string(),
        ];
        let c = RunConfig::parse("[solver]\neps = 0.1\n", &sets).unwrap();
        assert_eq!(c.solver.eps, 0.025);
        assert_eq!(c.profile.theta_plus, 1.2);
        assert_eq!(c.gas.prandtl_mode, kinlim::kinetic_model::gas::PrandtlMode::Bgk);
        assert_eq!(c.sweep.eps, vec![0.2, 0.1, 0.05]);
        assert!(matches!(RunConfig::parse("", &["novalue".into()]), Err(ConfigError::Set(_))));
    }

    #[test]
    fn invariants_of_target_modules_are_enforced() {
        assert!(matches!(RunConfig::parse("", &["gas.R=-1".into()]), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse("", &["solver.cfl=1.5".into()]), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse("", &["sweep.eps=[0.1, 0.05]".into()]), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse("", &["solver.checkpoint_times=[9.0]".into()]), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn delta_list_gives_one_plan_each() {
        let c = RunConfig::parse("[sweep]\ndelta = [0.05, 0.1]\n", &[]).unwrap();
        let plans = c.sweep_plans();
        assert_eq!(plans.len(), 2);
        assert_eq!(plans[1].profile.theta_plus, 1.1);
    }
}
