//! Time integration of `ε f_t + ξ1 f_x = Q(f)/ε` on a fixed Eulerian grid.
//!
//! Each step splits free transport (finite volumes, upwind or limited
//! second order) from the exact relaxation of the collision surrogate.
//! Far-field Maxwellians sit in two ghost cells per side.

pub mod checkpoint;
pub mod diagnostics;
pub mod relax;
pub mod transport;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::field::{DistributionField, XGrid};
use crate::kinetic_model::gas::GasModel;
use crate::kinetic_model::local;
use crate::kinetic_model::macrostate::{Conserved, MacroState};
use crate::kinetic_model::velocity::{VelocityGrid, VelocityMode};
use crate::profile_builder::ansatz::AnsatzProfile;
use crate::profile_builder::distribution::ansatz_distribution;
use crate::profile_builder::mapping::LagrangianMap;
use crate::tolerances;

pub use diagnostics::{DiagnosticsFrame, Reference};
pub use relax::{CellStats, ReducedKernel};
pub use transport::SpatialOrder;

/// Cells per parallel work item.
const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Transport then relaxation, first order in time.
    Split1,
    /// Symmetric splitting with merged transport half steps.
    Strang,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub cfl: f64,
    pub t_end: f64,
    /// Sorted times in `(0, t_end]` at which frames are emitted.
    pub output_times: Vec<f64>,
    pub scheme: Scheme,
    pub order: SpatialOrder,
    pub xgrid: XGrid,
    pub vgrid: VelocityGrid,
    pub gas: GasModel,
    /// Far-field states `[left, right]` held in the ghost cells.
    pub boundary: [MacroState; 2],
    /// Weight Maxwellian of the microscopic norms; `None` picks
    /// `θ* = 0.9 min θ`, `u* = 0`, `ρ* = mean ρ` per frame.
    pub star: Option<MacroState>,
    /// Disables the collision step (free transport).
    pub collisions: bool,
    /// Directory for state dumps written when a step fails.
    pub dump_dir: Option<PathBuf>,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Config(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.output_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("output times must be strictly increasing".into()));
        }
        if let Some(t) = self.output_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_end)) {
            return Err(Error::Config(format!("output time {t} outside [0, {}]", self.t_end)));
        }
        if self.xgrid.n < 4 || !(self.xgrid.dx > 0.0) {
            return Err(Error::Config("x-grid needs at least 4 cells and dx > 0".into()));
        }
        if self.boundary.iter().any(|s| !s.is_valid()) {
            return Err(Error::Config(format!("invalid boundary states {:?}", self.boundary)));
        }
        self.gas.validate()
    }

    /// `Δt = cfl · ε Δx / V`.
    pub fn dt_max(&self) -> f64 {
        self.cfl * self.eps * self.xgrid.dx / self.vgrid.cutoff
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub field: DistributionField,
    pub time: f64,
    pub steps: u64,
    /// Total moments at the start of the run.
    pub initial: Conserved,
    /// Accumulated boundary inflow of the moments.
    pub inflow: Conserved,
    work: Vec<f64>,
}

impl PartialEq for SolverState {
    fn eq(&self, o: &Self) -> bool {
        self.field == o.field && self.time == o.time && self.steps == o.steps && self.initial == o.initial && self.inflow == o.inflow
    }
}

impl SolverState {
    pub fn new(field: DistributionField, time: f64) -> Self {
        let initial = field.total_moments();
        let work = vec![0.0; field.data.len()];
        Self { field, time, steps: 0, initial, inflow: Conserved::default(), work }
    }

    /// Restores the bookkeeping of a saved run.
    pub fn resume(field: DistributionField, time: f64, steps: u64, initial: Conserved, inflow: Conserved) -> Self {
        let work = vec![0.0; field.data.len()];
        Self { field, time, steps, initial, inflow, work }
    }

    /// `(M(t) - M(0) - inflow) / M(0)` for the total mass.
    pub fn mass_drift(&self) -> f64 {
        let m = self.field.total_moments().mass;
        (m - self.initial.mass - self.inflow.mass) / self.initial.mass
    }

    /// Largest relative drift over mass, momentum and energy.
    pub fn conservation_drift(&self) -> f64 {
        let now = self.field.total_moments();
        let scale = self.initial.mass.abs().max(self.initial.energy.abs());
        let d = [
            now.mass - self.initial.mass - self.inflow.mass,
            now.momentum[0] - self.initial.momentum[0] - self.inflow.momentum[0],
            now.momentum[1] - self.initial.momentum[1] - self.inflow.momentum[1],
            now.momentum[2] - self.initial.momentum[2] - self.inflow.momentum[2],
            now.energy - self.initial.energy - self.inflow.energy,
        ];
        d.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }
}

pub struct Solver {
    pub config: SolverConfig,
    /// Discrete Maxwellians of the boundary states.
    ghosts: [Vec<f64>; 2],
    kernel: ReducedKernel,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let mut ghosts = [Vec::new(), Vec::new()];
        for (g, s) in ghosts.iter_mut().zip(&config.boundary) {
            *g = local::maxwellian(&config.vgrid, &config.gas, config.eps, s)?;
        }
        let kernel = match config.vgrid.mode {
            VelocityMode::Reduced => ReducedKernel::new(&config.vgrid, &config.gas)?,
            VelocityMode::Full3d => ReducedKernel::new(&config.vgrid.with_mode(VelocityMode::Reduced), &config.gas)?,
        };
        Ok(Self { config, ghosts, kernel })
    }

    /// Far-field states `M[1/θ±, 0, θ±]` of a diffusion-wave profile.
    pub fn far_field(theta_minus: f64, theta_plus: f64) -> [MacroState; 2] {
        [MacroState::new(1.0 / theta_minus, [0.0; 3], theta_minus), MacroState::new(1.0 / theta_plus, [0.0; 3], theta_plus)]
    }

    pub fn check_field(&self, field: &DistributionField) -> Result<()> {
        let c = &self.config;
        if field.xgrid != c.xgrid || field.vgrid != c.vgrid || field.eps != c.eps {
            return Err(Error::GridMismatch("field grids or ε differ from the solver configuration".into()));
        }
        Ok(())
    }

    /// State at `t = 0` from the ansatz distribution `M̄ + εḠ0`.
    pub fn init(&self, ansatz: &AnsatzProfile) -> Result<SolverState> {
        let c = &self.config;
        if (ansatz.eps - c.eps).abs() > 0.0 {
            return Err(Error::GridMismatch(format!("ansatz ε = {} but solver ε = {}", ansatz.eps, c.eps)));
        }
        let half = c.xgrid.x0.abs().max((c.xgrid.x0 + c.xgrid.length()).abs());
        let map = LagrangianMap::from_ansatz(ansatz, 0.0, half + c.xgrid.dx, 0.5 * c.xgrid.dx)?;
        let dist = ansatz_distribution(ansatz, &map, &c.vgrid, &c.xgrid)?;
        self.init_from_field(dist.field)
    }

    pub fn init_from_field(&self, field: DistributionField) -> Result<SolverState> {
        self.check_field(&field)?;
        field.check_nonnegative(tolerances::NEG_TOL_REL)?;
        Ok(SolverState::new(field, 0.0))
    }

    /// Entries per cell that transport and collisions must touch: the
    /// transverse marginals stay identically zero when they start so.
    fn active_len(&self, state: &SolverState) -> usize {
        let v = &self.config.vgrid;
        let n = v.n_nodes();
        if v.mode == VelocityMode::Reduced
            && self.ghosts.iter().all(|g| g[2 * n..].iter().all(|x| *x == 0.0))
            && (0..state.field.xgrid.n).all(|j| state.field.cell(j)[2 * n..].iter().all(|x| *x == 0.0))
        {
            2 * n
        } else {
            v.local_len()
        }
    }

    fn courant(&self, dt: f64, active: usize) -> Vec<f64> {
        let c = &self.config;
        let v = &c.vgrid;
        let n = v.n_nodes();
        let scale = dt / (c.eps * c.xgrid.dx);
        (0..active)
            .map(|l| {
                let k = match v.mode {
                    VelocityMode::Reduced => l % n,
                    VelocityMode::Full3d => l / (n * n),
                };
                v.nodes[k] * scale
            })
            .collect()
    }

    /// Entries past `courant.len()` are left as they are in the swap buffer,
    /// which [`Self::advance_to`] has zeroed to match the field.
    fn transport(&self, state: &mut SolverState, courant: &[f64]) {
        let len = state.field.local_len();
        let nx = state.field.xgrid.n;
        let act = courant.len();
        let order = self.config.order;
        let src = &state.field.data;
        let ghosts = &self.ghosts;
        let cell = |j: isize| -> &[f64] {
            if j < 0 {
                &ghosts[0]
            } else if j as usize >= nx {
                &ghosts[1]
            } else {
                let j = j as usize;
                &src[j * len..(j + 1) * len]
            }
        };
        let stencil = |i: isize| [cell(i - 2), cell(i - 1), cell(i), cell(i + 1)];
        state.work.par_chunks_mut(CHUNK * len).enumerate().for_each(|(c, out)| {
            let j0 = c * CHUNK;
            let m = out.len() / len;
            let mut flux = vec![0.0; (m + 1) * act];
            for i in 0..=m {
                transport::interface_flux(stencil((j0 + i) as isize), courant, order, &mut flux[i * act..(i + 1) * act]);
            }
            for i in 0..m {
                let f = &src[(j0 + i) * len..(j0 + i + 1) * len];
                let o = &mut out[i * len..(i + 1) * len];
                for l in 0..act {
                    o[l] = f[l] - (flux[(i + 1) * act + l] - flux[i * act + l]);
                }
            }
        });
        // Boundary bookkeeping: net inflow through the two end interfaces.
        let mut fl = vec![0.0; len];
        let mut fr = vec![0.0; len];
        transport::interface_flux(stencil(0), courant, order, &mut fl[..act]);
        transport::interface_flux(stencil(nx as isize), courant, order, &mut fr[..act]);
        let vg = &self.config.vgrid;
        let dx = self.config.xgrid.dx;
        let net = local::moments(vg, &fl).add(&local::moments(vg, &fr).scale(-1.0)).scale(dx);
        state.inflow = state.inflow.add(&net);
        std::mem::swap(&mut state.field.data, &mut state.work);
    }

    fn collide(&self, state: &mut SolverState, tau: f64, active: usize) -> Result<CellStats> {
        let len = state.field.local_len();
        let n = self.config.vgrid.n_nodes();
        let (eps, vg, gas) = (self.config.eps, &self.config.vgrid, &self.config.gas);
        let fast = vg.mode == VelocityMode::Reduced && active == 2 * n;
        state
            .field
            .data
            .par_chunks_mut(CHUNK * len)
            .enumerate()
            .map(|(c, chunk)| {
                let mut scratch = vec![0.0; 3 * n];
                let mut stats = CellStats::EMPTY;
                for (i, cell) in chunk.chunks_mut(len).enumerate() {
                    let j = c * CHUNK + i;
                    let s = if fast {
                        self.kernel.relax(cell, eps, tau, j, &mut scratch)?
                    } else {
                        relax::relax_generic(vg, gas, cell, eps, tau, j)?
                    };
                    stats = stats.merge(s);
                }
                Ok(stats)
            })
            .try_reduce(|| CellStats::EMPTY, |a, b| Ok(a.merge(b)))
    }

    fn field_stats(&self, state: &SolverState) -> CellStats {
        let len = state.field.local_len();
        let v = &self.config.vgrid;
        let signed = if v.mode == VelocityMode::Reduced { 2 * v.n_nodes() } else { len };
        state.field.data.par_chunks(len).map(|c| CellStats::of(&c[..signed])).reduce(|| CellStats::EMPTY, CellStats::merge)
    }

    /// Aborts on NaN or on `min < -tol · max`, dumping the state if configured.
    fn monitor(&self, state: &SolverState, stats: CellStats) -> Result<()> {
        let bad = if !stats.finite {
            Some("non-finite value in the distribution".to_string())
        } else if stats.min_value < -tolerances::NEG_TOL_REL * stats.max_value {
            Some(format!("positivity lost: min {:e} vs max {:e}", stats.min_value, stats.max_value))
        } else {
            None
        };
        match bad {
            None => Ok(()),
            Some(reason) => Err(self.fail(state, reason)),
        }
    }

    fn fail(&self, state: &SolverState, reason: String) -> Error {
        let dump = self.config.dump_dir.as_ref().and_then(|d| {
            let path = d.join(format!("dump_step{}.klim", state.steps));
            checkpoint::write(&path, state).ok().map(|_| path.display().to_string())
        });
        Error::Solver { step: state.steps, reason, dump }
    }

    /// Advances to exactly `t_target` with the largest uniform step not
    /// exceeding [`SolverConfig::dt_max`].
    pub fn advance_to(&self, state: &mut SolverState, t_target: f64) -> Result<()> {
        self.check_field(&state.field)?;
        let span = t_target - state.time;
        if span < 0.0 {
            return Err(Error::Config(format!("cannot advance from t = {} back to {t_target}", state.time)));
        }
        if span == 0.0 {
            return Ok(());
        }
        let m = ((span / self.config.dt_max()) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        let dt = span / m as f64;
        let active = self.active_len(state);
        let len = state.field.local_len();
        if active < len {
            // The inactive entries are zero in the field; zeroing them in
            // the swap buffer once lets transport skip them entirely.
            for cell in state.work.chunks_mut(len) {
                cell[active..].fill(0.0);
            }
        }
        let full = self.courant(dt, active);
        let t0 = state.time;
        let stepped = |solver: &Self, state: &mut SolverState, i: u64| -> Result<()> {
            let stats = if solver.config.collisions {
                solver.collide(state, dt, active).map_err(|e| solver.fail(state, e.to_string()))?
            } else {
                solver.field_stats(state)
            };
            state.steps += 1;
            state.time = if i + 1 == m { t_target } else { t0 + dt * (i + 1) as f64 };
            solver.monitor(state, stats)
        };
        match self.config.scheme {
            Scheme::Split1 => {
                for i in 0..m {
                    self.transport(state, &full);
                    stepped(self, state, i)?;
                }
            }
            Scheme::Strang => {
                let half = self.courant(0.5 * dt, active);
                self.transport(state, &half);
                for i in 0..m {
                    // `stepped` advances the clock here; the trailing half
                    // transport of the last step completes it.
                    stepped(self, state, i)?;
                    self.transport(state, if i + 1 == m { &half } else { &full });
                }
                let stats = self.field_stats(state);
                self.monitor(state, stats)?;
            }
        }
        Ok(())
    }

    /// Advances through every output time after the current one, calling
    /// `on_output` at each.
    pub fn run(&self, state: &mut SolverState, mut on_output: impl FnMut(&SolverState) -> Result<()>) -> Result<()> {
        let times: Vec<f64> = self.config.output_times.iter().copied().filter(|t| *t > state.time).collect();
        for t in times {
            self.advance_to(state, t)?;
            on_output(state)?;
        }
        if state.time < self.config.t_end {
            self.advance_to(state, self.config.t_end)?;
        }
        Ok(())
    }

    /// Writes a checkpoint of `state`.
    pub fn checkpoint(&self, path: &Path, state: &SolverState) -> Result<()> {
        checkpoint::write(path, state)
    }
}
