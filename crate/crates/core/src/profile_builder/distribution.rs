//! The ansatz distribution `f̄ = M̄ + εḠ0` and its kinetic residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::field::{DistributionField, XGrid};
use crate::kinetic_model::local::{self, Projector};
use crate::kinetic_model::macrostate::MacroState;
use crate::kinetic_model::poly::{Gauss, PolyM};
use crate::kinetic_model::velocity::{VelocityGrid, VelocityMode};
use crate::numerics::fit::{self, PowerFit};
use crate::numerics::jet::Jet;
use crate::numerics::scalar::Dual;
use crate::profile_builder::ansatz::{similarity_lattice, AnsatzPoint, AnsatzProfile};
use crate::profile_builder::mapping::LagrangianMap;
use crate::profile_builder::micro;
use crate::tolerances;

/// Ansatz macroscopic state at a point.
pub fn point_state(p: &AnsatzPoint) -> MacroState {
    MacroState::new(1.0 / p.v.value(), [p.u[0].value(), p.u[1].value(), p.u[2].value()], p.theta.value())
}

/// Exact `Ḡ0 = L_M̄⁻¹((1/v̄) P1(ξ1 M̄_x))` at a Lagrangian point.
pub fn gbar0(ans: &AnsatzProfile, p: &AnsatzPoint) -> PolyM<f64> {
    let eps = ans.eps;
    let r = ans.gas.r;
    let g = point_state(p).gauss(&ans.gas, eps);
    let rv = 1.0 / p.v.value();
    let w_grad = [0, 1, 2].map(|i| eps * p.u[i].dx() * rv);
    micro::leading_micro(g, w_grad, r * p.theta.dx() * rv, &ans.gas)
}

#[derive(Clone, Debug)]
pub struct AnsatzDistribution {
    pub field: DistributionField,
    /// Discrete `Ḡ0` per cell (microscopic to round-off).
    pub gbar: Vec<f64>,
    /// Lagrangian preimages of the cell centres.
    pub xhat: Vec<f64>,
    pub warnings: Vec<String>,
    /// `min f̄ / max f̄` over the sign-constrained components.
    pub min_ratio: f64,
}

/// `f̄` at time `t` on an Eulerian grid.
pub fn ansatz_distribution(ans: &AnsatzProfile, map: &LagrangianMap, vgrid: &VelocityGrid, xgrid: &XGrid) -> Result<AnsatzDistribution> {
    let t = map.t;
    let eps = ans.eps;
    let mut field = DistributionField::zeros(xgrid.clone(), vgrid.clone(), eps);
    let len = vgrid.local_len();
    let mut gbar = vec![0.0; xgrid.n * len];
    let mut xhat = Vec::with_capacity(xgrid.n);
    for j in 0..xgrid.n {
        let xh = map.inverse(xgrid.x(j))?;
        xhat.push(xh);
        let p = ans.point(xh, t);
        let state = point_state(&p);
        if !state.is_valid() {
            return Err(Error::NegativeProfile(format!("state {state:?} at X = {}", xgrid.x(j))));
        }
        let g = state.gauss(&ans.gas, eps);
        let wmax = g.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        vgrid.check_resolution(&ans.gas, state.theta, wmax)?;
        let fit = local::fit_maxwellian(vgrid, &g)?;
        let m = local::materialize(vgrid, &PolyM::maxwellian(fit));
        let gb = if ans.sim.is_constant() && ans.corr.is_zero() {
            vec![0.0; len]
        } else {
            let raw = local::materialize(vgrid, &gbar0(ans, &p));
            Projector::new(vgrid, fit)?.p1(vgrid, &raw)
        };
        let cell = field.cell_mut(j);
        for k in 0..len {
            cell[k] = m[k] + eps * gb[k];
        }
        gbar[j * len..(j + 1) * len].copy_from_slice(&gb);
    }

    let n = vgrid.n_nodes();
    let signed = |c: &[f64]| -> Vec<f64> {
        if vgrid.mode == VelocityMode::Reduced { c[..2 * n].to_vec() } else { c.to_vec() }
    };
    let max = field.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut min_ratio = f64::INFINITY;
    let mut warnings = Vec::new();
    for j in 0..xgrid.n {
        let (k, v) = signed(field.cell(j))
            .into_iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
        min_ratio = min_ratio.min(v / max);
        if v < 0.0 && warnings.len() < 16 {
            warnings.push(format!("f̄ = {v:e} at X = {}, node {k}", xgrid.x(j)));
        }
    }
    if min_ratio < -tolerances::ANSATZ_NEG_HARD {
        return Err(Error::NegativeProfile(format!("min f̄ / max f̄ = {min_ratio:e}")));
    }
    Ok(AnsatzDistribution { field, gbar, xhat, warnings, min_ratio })
}

fn seeded(j: &Jet, along_t: bool) -> Dual {
    Dual::new(j.value(), if along_t { j.dt() } else { j.dx() })
}

/// `M̄` and `Ḡ0` with their derivative along x or t.
fn seeded_parts(ans: &AnsatzProfile, p: &AnsatzPoint, along_t: bool) -> (PolyM<f64>, PolyM<f64>) {
    let eps = ans.eps;
    let r = ans.gas.r;
    let rv = p.v.recip();
    let g = Gauss {
        rho: seeded(&rv, along_t),
        w: [0, 1, 2].map(|i| seeded(&(p.u[i] * eps), along_t)),
        t: seeded(&(p.theta * r), along_t),
    };
    let w_grad = [0, 1, 2].map(|i| seeded(&(p.u[i].diff_x() * rv * eps), along_t));
    let t_grad = seeded(&(p.theta.diff_x() * rv * r), along_t);
    let m = PolyM::maxwellian(g).derivative();
    let gb = micro::leading_micro(g, w_grad, t_grad, &ans.gas).derivative();
    (m, gb)
}

/// Kinetic residual of the ansatz distribution in the Lagrangian frame,
/// `R_f = εf̄_t - (εū1/v̄) f̄_x + (1/v̄) ξ1 f̄_x - L_M̄ Ḡ0`, together with its
/// part `(ε/v̄) P1(ξ1 Ḡ0_x)` that is first order in `ε`.
pub fn kinetic_residual(ans: &AnsatzProfile, x: f64, t: f64) -> (PolyM<f64>, PolyM<f64>) {
    let p = ans.point(x, t);
    let eps = ans.eps;
    let v = p.v.value();
    let w1 = eps * p.u[0].value();
    let (m_x, g_x) = seeded_parts(ans, &p, false);
    let (m_t, g_t) = seeded_parts(ans, &p, true);
    let xi_gx = g_x.mul_xi1().scale(eps / v);
    let first_order = xi_gx.p1();
    let r = m_t
        .scale(eps)
        .sub(&m_x.scale(w1 / v))
        .add(&m_x.mul_xi1().p0().scale(1.0 / v))
        .add(&g_t.scale(eps * eps))
        .sub(&g_x.scale(eps * w1 / v))
        .add(&xi_gx);
    (r, first_order)
}

/// `(∫ h²/M dξ)^{1/2}` for `h = p M`.
pub fn m_norm(h: &PolyM<f64>) -> f64 {
    h.integrate_with(&h.p).max(0.0).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KineticResidualReport {
    pub eps: Vec<f64>,
    /// `sup_x ‖R_f‖` per ε.
    pub full: Vec<f64>,
    /// `sup_x ‖R_f - (ε/v̄)P1(ξ1 Ḡ0_x)‖` per ε.
    pub reduced: Vec<f64>,
    pub full_fit: PowerFit,
    pub reduced_fit: PowerFit,
}

pub fn kinetic_residual_sweep(base: &AnsatzProfile, eps_list: &[f64], t: f64, eta_max: f64, n_x: usize) -> Result<KineticResidualReport> {
    let xs = similarity_lattice(t, eta_max, n_x);
    let (mut full, mut reduced) = (Vec::new(), Vec::new());
    for &eps in eps_list {
        let ans = base.with_eps(eps)?;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for &x in &xs {
            let (r, first) = kinetic_residual(&ans, x, t);
            a = a.max(m_norm(&r));
            b = b.max(m_norm(&r.sub(&first)));
        }
        full.push(a);
        reduced.push(b);
    }
    Ok(KineticResidualReport {
        eps: eps_list.to_vec(),
        full_fit: fit::power_law(eps_list, &full, 2)?,
        reduced_fit: fit::power_law(eps_list, &reduced, 2)?,
        full,
        reduced,
    })
}
