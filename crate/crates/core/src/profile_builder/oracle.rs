//! Time-dependent checks of the similarity solutions against the
//! independent PDE integrators.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fluid_oracle::{self, Grid1D, ScalarField};
use crate::kinetic_model::gas::GasModel;
use crate::numerics::interp::Tabulated;
use crate::profile_builder::corrections::{solve_theta_nf, solve_transverse};
use crate::profile_builder::similarity::{derivative, SimilarityProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub t_end: f64,
    pub dx: f64,
    pub dt: f64,
    /// `sup_x |θ(x, T) - θ̂(x/√(1+T))|`.
    pub sup_deviation: f64,
    /// Deviation divided by the profile scale (`δ`, or `sup|G'|`).
    pub relative: f64,
}

/// Evolves `θ̂(x)` under `θ_t = (a(θ)θ_x)_x` and compares with the
/// similarity form at `t_end`.
pub fn fluid_oracle_check(sim: &SimilarityProfile, t_end: f64, half: f64, dx: f64, dt: f64) -> Result<OracleReport> {
    let grid = Grid1D::symmetric(half, dx, dt)?;
    let init = ScalarField::from_fn(&grid, 0.0, |x| sim.value(x));
    let out = fluid_oracle::evolve_nonlinear(&grid, &init, &sim.a, t_end)?;
    let s = (1.0 + t_end).sqrt();
    let dev = grid.nodes().iter().zip(&out.values).fold(0.0f64, |m, (x, v)| m.max((v - sim.value(x / s)).abs()));
    let scale = if sim.delta > 0.0 { sim.delta } else { 1.0 };
    Ok(OracleReport { t_end, dx: grid.dx, dt, sup_deviation: dev, relative: dev / scale })
}

/// Settings of the standard self-similarity check: `T = 8` on `[-40, 40]`.
pub const STANDARD_CHECK: (f64, f64, f64, f64) = (8.0, 40.0, 0.02, 0.005);

/// [`fluid_oracle_check`] with [`STANDARD_CHECK`].
pub fn standard_fluid_check(sim: &SimilarityProfile) -> Result<OracleReport> {
    let (t, half, dx, dt) = STANDARD_CHECK;
    fluid_oracle_check(sim, t, half, dx, dt)
}

/// Which linear correction equation to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrectionKind {
    /// `θ^nf_t = (a θ^nf_x)_x + (a'(θ̂) θ̂_x θ^nf)_x + (3/5) N̂_x`.
    Temperature,
    /// `ū_t = ((μ/θ̂) ū_x)_x + N̂_x`.
    Transverse,
}

/// Solves the similarity ODE for source `d(η)`, integrates the
/// corresponding PDE from `G'(x)` and compares with `G'(η)/√(1+T)`.
pub fn correction_oracle_check(
    sim: &SimilarityProfile,
    gas: &GasModel,
    kind: CorrectionKind,
    d: &[f64],
    t_end: f64,
    half: f64,
    dx: f64,
    dt: f64,
) -> Result<OracleReport> {
    let (prof, weight) = match kind {
        CorrectionKind::Temperature => (solve_theta_nf(sim, d)?, 0.6),
        CorrectionKind::Transverse => (solve_transverse(sim, &gas.mu_over_theta_law(), d)?, 1.0),
    };
    let (eta0, h) = (sim.eta0(), sim.h());
    let gp = Tabulated::new(eta0, h, vec![prof.dg.clone(), derivative(&prof.dg, h)]);
    let dd = Tabulated::new(eta0, h, vec![derivative(d, h), derivative(&derivative(d, h), h)]);

    let grid = Grid1D::symmetric(half, dx, dt)?;
    let xs = grid.nodes();
    let mut f = ScalarField::from_fn(&grid, 0.0, |x| gp.value(x));
    let steps = (t_end / dt).ceil() as usize;
    let dt = t_end / steps as f64;
    let (a, mot) = (gas.a_law(), gas.mu_over_theta_law());
    for _ in 0..steps {
        let t = f.t + dt;
        let s = (1.0 + t).sqrt();
        let mut coeff = Vec::with_capacity(xs.len());
        let mut drift = Vec::with_capacity(xs.len());
        let mut source = Vec::with_capacity(xs.len());
        for &x in &xs {
            let th = sim.eval(x / s);
            match kind {
                CorrectionKind::Temperature => {
                    let ad = a.derivs(th[0], 2);
                    coeff.push(ad[0]);
                    drift.push(ad[1] * th[1] / s);
                }
                CorrectionKind::Transverse => {
                    coeff.push(mot.value(th[0]));
                    drift.push(0.0);
                }
            }
            source.push(weight * dd.value(x / s) / (s * s * s));
        }
        f = fluid_oracle::step_linear_correction(&grid, &f, &coeff, &drift, &source, dt)?;
    }
    let s = (1.0 + t_end).sqrt();
    let dev = xs.iter().zip(&f.values).fold(0.0f64, |m, (x, v)| m.max((v - gp.value(x / s) / s).abs()));
    let scale = (0..xs.len()).fold(0.0f64, |m, i| m.max((gp.value(xs[i] / s) / s).abs()));
    Ok(OracleReport { t_end, dx: grid.dx, dt, sup_deviation: dev, relative: dev / scale.max(f64::MIN_POSITIVE) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile_builder::similarity::{solve_theta_hat, SimilarityOptions};

    #[test]
    fn constant_profile_has_zero_deviation() {
        let gas = GasModel::default();
        let sim = solve_theta_hat(1.2, 1.2, gas.a_law(), &SimilarityOptions::default()).unwrap();
        let r = fluid_oracle_check(&sim, 1.0, 10.0, 0.1, 0.1).unwrap();
        assert!(r.sup_deviation <= 4.0 * f64::EPSILON * 1.2, "{r:?}");
    }

    #[test]
    fn synthetic_source_correction_keeps_similarity_form() {
        let gas = GasModel::default();
        let sim = solve_theta_hat(1.0, 1.1, gas.a_law(), &SimilarityOptions { n_nodes: 4001, ..Default::default() }).unwrap();
        // A smooth localized source standing in for D(η).
        let d: Vec<f64> = (0..sim.n_nodes()).map(|i| sim.dtheta_hat()[i] * (1.0 + 0.5 * sim.eta(i))).collect();
        for kind in [CorrectionKind::Temperature, CorrectionKind::Transverse] {
            let r = correction_oracle_check(&sim, &gas, kind, &d, 2.0, 16.0, 0.02, 0.001).unwrap();
            assert!(r.relative < 1e-3, "{kind:?}: {r:?}");
        }
    }
}
