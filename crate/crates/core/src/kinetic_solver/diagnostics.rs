//! Per-frame macroscopic and microscopic comparison norms.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kinetic_model::local;
use crate::kinetic_model::macrostate::MacroState;
use crate::kinetic_model::poly::{Gauss, PolyM};
use crate::kinetic_solver::{SolverConfig, SolverState};
use crate::profile_builder::ansatz::AnsatzProfile;
use crate::profile_builder::distribution::ansatz_distribution;
use crate::profile_builder::mapping::LagrangianMap;

pub const CSV_HEADER: [&str; 9] =
    ["t", "eps", "l2_macro", "linf_macro", "h1_macro", "l2_micro", "l2_micro_deriv", "entropy", "mass_drift"];

/// The ansatz at the run's ε and the diffusion wave it corrects.
#[derive(Clone, Debug)]
pub struct Reference {
    pub ansatz: AnsatzProfile,
    pub wave: AnsatzProfile,
}

impl Reference {
    pub fn new(ansatz: AnsatzProfile) -> Result<Self> {
        let wave = ansatz.with_eps(0.0)?;
        Ok(Self { ansatz, wave })
    }
}

/// Discrete `L²`, `L∞` and `H¹` norms of a vector-valued grid function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
}

impl Norms {
    pub fn of<const K: usize>(d: &[[f64; K]], dx: f64) -> Self {
        let sq = |v: &[f64; K]| v.iter().map(|x| x * x).sum::<f64>();
        let l2sq: f64 = d.iter().map(sq).sum::<f64>() * dx;
        let linf = d.iter().fold(0.0f64, |m, v| m.max(sq(v).sqrt()));
        let grad: f64 = d
            .windows(2)
            .map(|w| {
                let g: [f64; K] = std::array::from_fn(|k| (w[1][k] - w[0][k]) / dx);
                sq(&g)
            })
            .sum::<f64>()
            * dx;
        Self { l2: l2sq.sqrt(), linf, h1: (l2sq + grad).sqrt() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticsFrame {
    pub t: f64,
    pub eps: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<[f64; 3]>,
    pub theta: Vec<f64>,
    /// Norms of `(v - v̄, εu - εū, θ - θ̄)`.
    pub vs_ansatz: Option<Norms>,
    /// Norms of `(v - ṽ, u1 - ũ1, θ - θ̃)`.
    pub vs_wave: Option<Norms>,
    /// `sup_x max(|v - ṽ|, |θ - θ̃|)`.
    pub e_macro: Option<f64>,
    /// `sup_x |u1 - ũ1|` and where it is attained.
    pub e_u: Option<f64>,
    pub e_u_at: Option<f64>,
    /// `‖G̃‖` with `G̃ = G - Ḡ`, weighted by `1/M*`.
    pub l2_micro: f64,
    /// Same for the difference quotient `∂x G̃`.
    pub l2_micro_deriv: f64,
    /// `‖G‖` of the full microscopic part.
    pub l2_micro_full: f64,
    pub entropy: f64,
    pub mass_drift: f64,
    pub star: MacroState,
}

impl DiagnosticsFrame {
    pub fn csv_row(&self) -> [f64; 9] {
        let m = self.vs_ansatz.unwrap_or_default();
        [self.t, self.eps, m.l2, m.linf, m.h1, self.l2_micro, self.l2_micro_deriv, self.entropy, self.mass_drift]
    }

    /// `∂x θ` by centred differences (one-sided at the ends).
    pub fn theta_x(&self) -> Vec<f64> {
        let n = self.theta.len();
        let dx = self.x[1] - self.x[0];
        (0..n)
            .map(|j| {
                let (a, b) = (j.saturating_sub(1), (j + 1).min(n - 1));
                (self.theta[b] - self.theta[a]) / ((b - a) as f64 * dx)
            })
            .collect()
    }
}

/// Reference fields on the Eulerian cell centres at time `t`.
struct Mapped {
    v: Vec<f64>,
    u: Vec<[f64; 3]>,
    theta: Vec<f64>,
}

fn mapped(ans: &AnsatzProfile, map: &LagrangianMap, xs: &[f64], t: f64) -> Result<Mapped> {
    let pts = xs
        .iter()
        .map(|&x| Ok(ans.point(map.inverse(x)?, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Mapped {
        v: pts.iter().map(|p| p.v.value()).collect(),
        u: pts.iter().map(|p| [p.u[0].value(), p.u[1].value(), p.u[2].value()]).collect(),
        theta: pts.iter().map(|p| p.theta.value()).collect(),
    })
}

fn map_for(ans: &AnsatzProfile, cfg: &SolverConfig, t: f64) -> Result<LagrangianMap> {
    let g = &cfg.xgrid;
    let half = g.x0.abs().max((g.x0 + g.length()).abs());
    LagrangianMap::from_ansatz(ans, t, half + g.dx, 0.5 * g.dx)
}

pub fn diagnostics(state: &SolverState, cfg: &SolverConfig, reference: Option<&Reference>) -> Result<DiagnosticsFrame> {
    let f = &state.field;
    let (vg, gas, eps) = (&f.vgrid, &cfg.gas, f.eps);
    let nx = f.xgrid.n;
    let len = f.local_len();
    let dx = f.xgrid.dx;
    let t = state.time;
    let xs = f.xgrid.centers();

    // Microscopic part G = (f - M[f]) / ε cell by cell.
    let per_cell = (0..nx)
        .into_par_iter()
        .map(|j| {
            let c = f.cell(j);
            let st = local::moment_gauss(vg, gas, c, j)?;
            let fit = local::fit_maxwellian(vg, &st)?;
            let m = local::materialize(vg, &PolyM::maxwellian(fit));
            let g: Vec<f64> = c.iter().zip(&m).map(|(a, b)| (a - b) / eps).collect();
            Ok((local::macro_state(vg, gas, eps, c, j)?, st.t, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let states: Vec<MacroState> = per_cell.iter().map(|p| p.0).collect();

    let star = cfg.star.unwrap_or_else(|| {
        let tmin = states.iter().fold(f64::INFINITY, |m, s| m.min(s.theta));
        let rho = states.iter().map(|s| s.rho).sum::<f64>() / nx as f64;
        MacroState::new(rho, [0.0; 3], 0.9 * tmin)
    });
    let star_g: Gauss<f64> = star.gauss(gas, eps);

    let mut frame = DiagnosticsFrame {
        t,
        eps,
        x: xs.clone(),
        rho: states.iter().map(|s| s.rho).collect(),
        u: states.iter().map(|s| s.u).collect(),
        theta: states.iter().map(|s| s.theta).collect(),
        vs_ansatz: None,
        vs_wave: None,
        e_macro: None,
        e_u: None,
        e_u_at: None,
        l2_micro: 0.0,
        l2_micro_deriv: 0.0,
        l2_micro_full: 0.0,
        entropy: f.entropy(),
        mass_drift: state.mass_drift(),
        star,
    };

    let mut gtilde: Vec<f64> = per_cell.iter().flat_map(|p| p.2.iter().copied()).collect();
    if let Some(r) = reference {
        let map = map_for(&r.ansatz, cfg, t)?;
        let a = mapped(&r.ansatz, &map, &xs, t)?;
        let wmap = map_for(&r.wave, cfg, t)?;
        let w = mapped(&r.wave, &wmap, &xs, t)?;
        let da: Vec<[f64; 5]> = (0..nx)
            .map(|j| {
                let s = &states[j];
                [
                    1.0 / s.rho - a.v[j],
                    eps * (s.u[0] - a.u[j][0]),
                    eps * (s.u[1] - a.u[j][1]),
                    eps * (s.u[2] - a.u[j][2]),
                    s.theta - a.theta[j],
                ]
            })
            .collect();
        let dw: Vec<[f64; 3]> =
            (0..nx).map(|j| [1.0 / states[j].rho - w.v[j], states[j].u[0] - w.u[j][0], states[j].theta - w.theta[j]]).collect();
        frame.vs_ansatz = Some(Norms::of(&da, dx));
        frame.vs_wave = Some(Norms::of(&dw, dx));
        frame.e_macro = Some(dw.iter().fold(0.0f64, |m, d| m.max(d[0].abs()).max(d[2].abs())));
        let (mut eu, mut at) = (0.0f64, xs[0]);
        for (d, x) in dw.iter().zip(&xs) {
            if d[1].abs() > eu {
                eu = d[1].abs();
                at = *x;
            }
        }
        frame.e_u = Some(eu);
        frame.e_u_at = Some(at);
        let gbar = ansatz_distribution(&r.ansatz, &map, vg, &f.xgrid)?.gbar;
        for (g, b) in gtilde.iter_mut().zip(&gbar) {
            *g -= b;
        }
    }

    let tl: Vec<f64> = per_cell.iter().map(|p| p.1).collect();
    let norm = |g: &[f64], j: usize| local::weighted_norm_sq(vg, g, &star_g, tl[j]);
    frame.l2_micro = ((0..nx).map(|j| norm(&gtilde[j * len..(j + 1) * len], j)).sum::<f64>() * dx).sqrt();
    frame.l2_micro_full = ((0..nx).map(|j| norm(&per_cell[j].2, j)).sum::<f64>() * dx).sqrt();
    let mut deriv = 0.0;
    let mut q = vec![0.0; len];
    for j in 0..nx.saturating_sub(1) {
        for l in 0..len {
            q[l] = (gtilde[(j + 1) * len + l] - gtilde[j * len + l]) / dx;
        }
        let tm = 0.5 * (tl[j] + tl[j + 1]);
        deriv += local::weighted_norm_sq(vg, &q, &star_g, tm);
    }
    frame.l2_micro_deriv = (deriv * dx).sqrt();
    Ok(frame)
}

pub fn write_csv(path: &Path, frames: &[DiagnosticsFrame]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for f in frames {
        w.write_record(f.csv_row().iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_satisfy_the_basic_inequalities() {
        let d: Vec<[f64; 2]> = (0..50).map(|j| [(j as f64 * 0.3).sin(), 0.2 * j as f64 / 50.0]).collect();
        let dx = 0.1;
        let n = Norms::of(&d, dx);
        let len = 50.0 * dx;
        assert!(n.l2 >= 0.0 && n.h1 >= n.l2);
        assert!(n.linf >= n.l2 / len.sqrt());
    }
}
