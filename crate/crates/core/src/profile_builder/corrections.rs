//! Microscopic sources `N̂_i` and the similarity correction profiles
//! `G1` (giving `θ^nf = G1'`) and `G_i` (giving `ū_i = G_i'`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::gas::{GasModel, PowerLaw};
use crate::kinetic_model::local;
use crate::kinetic_model::velocity::VelocityGrid;
use crate::numerics::interp::Tabulated;
use crate::numerics::scalar::Dual;
use crate::numerics::tridiag;
use crate::profile_builder::micro::{self, LocalJet};
use crate::profile_builder::similarity::{derivative, SimilarityProfile};

/// Similarity forms `D_i(η)` of the sources, `N̂_i(x, t) = D_i(η) / (1+t)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NhatProfile {
    pub d: [Vec<f64>; 3],
}

impl NhatProfile {
    pub fn zeros(n: usize) -> Self {
        Self { d: [vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
    }

    pub fn sup(&self, i: usize) -> f64 {
        self.d[i].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Macroscopic jet of the diffusion wave `(ṽ, 0, θ̂)` at `t = 0`, node `i`.
pub fn wave_jet(sim: &SimilarityProfile, gas: &GasModel, i: usize) -> LocalJet {
    let th = sim.node_deriv(0, i);
    let d1 = sim.node_deriv(1, i);
    let d2 = sim.node_deriv(2, i);
    let theta = Dual::new(th, d1);
    let v = theta;
    let zero = Dual::new(0.0, 0.0);
    LocalJet {
        rho: Dual::new(1.0 / th, -d1 / (th * th)),
        w: [zero; 3],
        t: theta * gas.r,
        v,
        w_grad: [zero; 3],
        t_grad: Dual::new(d1, d2) * gas.r / v,
    }
}

/// `N̂1, N̂2, N̂3` at the diffusion-wave state on every η node, with the
/// velocity moments taken by quadrature on `vgrid`.
pub fn compute_nhat(sim: &SimilarityProfile, gas: &GasModel, vgrid: &VelocityGrid) -> Result<NhatProfile> {
    let n = sim.n_nodes();
    let mut out = NhatProfile::zeros(n);
    if sim.is_constant() {
        return Ok(out);
    }
    let mut buf = vec![0.0; vgrid.local_len()];
    for i in 0..n {
        let jet = wave_jet(sim, gas, i);
        let theta = micro::theta11(&jet, gas);
        local::materialize_into(vgrid, &theta, &mut buf);
        let (m, e) = local::flux_moments(vgrid, &buf);
        out.d[0][i] = -e;
        out.d[1][i] = -m[1];
        out.d[2][i] = -m[2];
    }
    Ok(out)
}

/// Same sources in closed form (exact Gaussian moments).
pub fn compute_nhat_exact(sim: &SimilarityProfile, gas: &GasModel) -> NhatProfile {
    let n = sim.n_nodes();
    let mut out = NhatProfile::zeros(n);
    if sim.is_constant() {
        return out;
    }
    for i in 0..n {
        let m = micro::n_moments(&micro::theta11(&wave_jet(sim, gas, i), gas));
        for k in 0..3 {
            out.d[k][i] = m[k];
        }
    }
    out
}

/// Solution of `c G'' + b G' + s = 0`, `G(left) = 0`, `G'(right) = 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearProfile {
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    /// Emergent right-end limit `G(right)`.
    pub delta: f64,
}

pub fn solve_linear_similarity(h: f64, c: &[f64], b: &[f64], s: &[f64]) -> Result<LinearProfile> {
    let n = c.len();
    if b.len() != n || s.len() != n || n < 3 {
        return Err(Error::GridMismatch("similarity coefficient arrays differ in length".into()));
    }
    if s.iter().all(|v| *v == 0.0) {
        return Ok(LinearProfile { g: vec![0.0; n], dg: vec![0.0; n], delta: 0.0 });
    }
    let hh = h * h;
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        lower[i] = c[i] / hh - b[i] / (2.0 * h);
        diag[i] = -2.0 * c[i] / hh;
        upper[i] = c[i] / hh + b[i] / (2.0 * h);
        rhs[i] = -s[i];
    }
    // Reflected ghost node enforces G'(right) = 0.
    lower[n - 1] = 2.0 * c[n - 1] / hh;
    diag[n - 1] = -2.0 * c[n - 1] / hh;
    rhs[n - 1] = -s[n - 1];
    let g = tridiag::solve(&lower, &diag, &upper, &rhs)?;
    let mut dg = derivative(&g, h);
    dg[n - 1] = 0.0;
    let delta = g[n - 1];
    Ok(LinearProfile { g, dg, delta })
}

/// Output of the correction solves, tabulated for evaluation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrectionProfile {
    pub nhat: NhatProfile,
    /// `G1, G2, G3` on the η grid.
    pub g: [Vec<f64>; 3],
    /// `δ_i = G_i(right end)`.
    pub delta: [f64; 3],
    pub warnings: Vec<String>,
    /// `G_i'` with derivatives (θ^nf for `i = 0`, `ū_{i+1}` otherwise).
    gprime: [Tabulated; 3],
    /// `D_i` with derivatives.
    sources: [Tabulated; 3],
}

impl CorrectionProfile {
    /// `θ^nf(η)` similarity form `G1'(η)`.
    pub fn theta_nf(&self) -> &[f64] {
        &self.gprime[0].derivs[0]
    }

    /// `[G_i', G_i'', G_i''', G_i'''']` at `η`.
    pub fn gprime(&self, i: usize, eta: f64) -> Vec<f64> {
        self.gprime[i].eval(eta)
    }

    pub fn source(&self, i: usize, eta: f64) -> f64 {
        if self.sources[i].derivs[0].iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        self.sources[i].value(eta)
    }

    pub fn is_zero(&self) -> bool {
        self.g.iter().all(|g| g.iter().all(|v| *v == 0.0))
    }
}

/// Tabulates `f` with derivatives: `f' = d1` (given), higher orders by
/// repeated fourth-order differencing.
fn tabulate(eta0: f64, h: f64, f: Vec<f64>, d1: Vec<f64>, orders: usize) -> Tabulated {
    let mut derivs = vec![f, d1];
    while derivs.len() < orders + 1 {
        let next = if derivs.last().unwrap().iter().all(|v| *v == 0.0) {
            vec![0.0; derivs[0].len()]
        } else {
            derivative(derivs.last().unwrap(), h)
        };
        derivs.push(next);
    }
    Tabulated::new(eta0, h, derivs)
}

/// `a(θ̂) G1'' + (a'(θ̂) θ̂' + η/2) G1' + (3/5) D2 = 0`.
pub fn solve_theta_nf(sim: &SimilarityProfile, d2: &[f64]) -> Result<LinearProfile> {
    let n = sim.n_nodes();
    let (mut c, mut b) = (vec![0.0; n], vec![0.0; n]);
    let s: Vec<f64> = d2.iter().map(|v| 0.6 * v).collect();
    for i in 0..n {
        let a = sim.a.derivs(sim.theta_hat()[i], 2);
        c[i] = a[0];
        b[i] = a[1] * sim.dtheta_hat()[i] + 0.5 * sim.eta(i);
    }
    solve_linear_similarity(sim.h(), &c, &b, &s)
}

/// `(μ(θ̂)/θ̂) G_i'' + (η/2) G_i' + D_i = 0`.
pub fn solve_transverse(sim: &SimilarityProfile, mu_over_theta: &PowerLaw, di: &[f64]) -> Result<LinearProfile> {
    let n = sim.n_nodes();
    let c: Vec<f64> = (0..n).map(|i| mu_over_theta.value(sim.theta_hat()[i])).collect();
    let b: Vec<f64> = (0..n).map(|i| 0.5 * sim.eta(i)).collect();
    solve_linear_similarity(sim.h(), &c, &b, di)
}

/// Sources, all three similarity corrections and their tables.
pub fn build_corrections(sim: &SimilarityProfile, gas: &GasModel, nhat: NhatProfile) -> Result<CorrectionProfile> {
    let n = sim.n_nodes();
    if nhat.d.iter().any(|d| d.len() != n) {
        return Err(Error::GridMismatch("N̂ sources are not on the similarity grid".into()));
    }
    let g1 = solve_theta_nf(sim, &nhat.d[0])?;
    let mot = gas.mu_over_theta_law();
    let g2 = solve_transverse(sim, &mot, &nhat.d[1])?;
    let g3 = solve_transverse(sim, &mot, &nhat.d[2])?;
    let (eta0, h) = (sim.eta0(), sim.h());

    let mut warnings = Vec::new();
    for (i, p) in [&g1, &g2, &g3].iter().enumerate() {
        let nonzero = nhat.d[i].iter().any(|v| *v != 0.0);
        if nonzero && !(p.delta > 0.0 && p.delta < sim.delta) {
            warnings.push(format!("emergent δ{} = {:e} outside (0, δ = {})", i + 1, p.delta, sim.delta));
        }
    }

    // Second derivatives from the ODEs themselves.
    let g1pp: Vec<f64> = (0..n)
        .map(|i| {
            let a = sim.a.derivs(sim.theta_hat()[i], 2);
            -((a[1] * sim.dtheta_hat()[i] + 0.5 * sim.eta(i)) * g1.dg[i] + 0.6 * nhat.d[0][i]) / a[0]
        })
        .collect();
    let trans_pp = |p: &LinearProfile, d: &[f64]| -> Vec<f64> {
        (0..n).map(|i| -(0.5 * sim.eta(i) * p.dg[i] + d[i]) / mot.value(sim.theta_hat()[i])).collect()
    };
    let g2pp = trans_pp(&g2, &nhat.d[1]);
    let g3pp = trans_pp(&g3, &nhat.d[2]);
    let gprime = [
        tabulate(eta0, h, g1.dg.clone(), g1pp, 4),
        tabulate(eta0, h, g2.dg.clone(), g2pp, 4),
        tabulate(eta0, h, g3.dg.clone(), g3pp, 4),
    ];
    let sources = [0, 1, 2].map(|i| {
        let d = nhat.d[i].clone();
        let dd = if d.iter().all(|v| *v == 0.0) { vec![0.0; n] } else { derivative(&d, h) };
        Tabulated::new(eta0, h, vec![d, dd])
    });
    Ok(CorrectionProfile {
        nhat,
        g: [g1.g, g2.g, g3.g],
        delta: [g1.delta, g2.delta, g3.delta],
        warnings,
        gprime,
        sources,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile_builder::similarity::{solve_theta_hat, SimilarityOptions};

    #[test]
    fn zero_source_gives_zero_corrections() {
        let gas = GasModel::default();
        let sim = solve_theta_hat(1.0, 1.1, gas.a_law(), &SimilarityOptions { n_nodes: 801, ..Default::default() }).unwrap();
        let c = build_corrections(&sim, &gas, NhatProfile::zeros(sim.n_nodes())).unwrap();
        assert!(c.is_zero());
        assert_eq!(c.delta, [0.0; 3]);
        assert!(c.theta_nf().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_bvp_matches_closed_form() {
        // G'' + G' = -s with G = 1 - e^{-(x+1)} ... use manufactured G = sin(πx/4)+... on [-1,1]
        let n = 2001;
        let h = 2.0 / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|i| -1.0 + h * i as f64).collect();
        // G = (x+1)^2 (x - 2) has G(-1)=0, G'(1) = 2·2·(-1) + 4 = 0.
        let g = |x: f64| (x + 1.0).powi(2) * (x - 2.0);
        let dg = |x: f64| 2.0 * (x + 1.0) * (x - 2.0) + (x + 1.0).powi(2);
        let ddg = |x: f64| 2.0 * (x - 2.0) + 4.0 * (x + 1.0);
        let c: Vec<f64> = x.iter().map(|v| 1.0 + 0.2 * v).collect();
        let b: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
        let s: Vec<f64> = (0..n).map(|i| -(c[i] * ddg(x[i]) + b[i] * dg(x[i]))).collect();
        let p = solve_linear_similarity(h, &c, &b, &s).unwrap();
        for i in 0..n {
            assert!((p.g[i] - g(x[i])).abs() < 1e-5, "{i} {} {}", p.g[i], g(x[i]));
        }
    }

    #[test]
    fn sources_vanish_on_a_resting_wave() {
        use crate::kinetic_model::velocity::VelocityMode;
        let gas = GasModel::default();
        let sim = solve_theta_hat(1.0, 1.1, gas.a_law(), &SimilarityOptions { n_nodes: 801, ..Default::default() }).unwrap();
        let exact = compute_nhat_exact(&sim, &gas);
        let vg = VelocityGrid::for_range(VelocityMode::Reduced, 64, &gas, 1.1, 0.0, 7.5).unwrap();
        let quad = compute_nhat(&sim, &gas, &vg).unwrap();
        for i in 0..3 {
            assert!(exact.sup(i) < 1e-14, "exact D{} = {}", i + 1, exact.sup(i));
            assert!(quad.sup(i) < 1e-12, "quadrature D{} = {}", i + 1, quad.sup(i));
        }
    }

    #[test]
    fn transverse_shear_source_matches_full_quadrature() {
        use crate::kinetic_model::velocity::VelocityMode;
        let gas = GasModel::default();
        let d = |re, du| Dual::new(re, du);
        let jet = LocalJet {
            rho: d(0.95, -0.02),
            w: [d(0.08, 0.02), d(0.1, 0.03), d(0.0, 0.0)],
            t: d(0.7, 0.01),
            v: d(1.05, 0.02),
            w_grad: [d(0.03, 0.01), d(0.04, -0.01), d(0.0, 0.0)],
            t_grad: d(0.02, 0.005),
        };
        let theta = micro::theta11(&jet, &gas);
        let exact = micro::n_moments(&theta);
        assert!(exact[1].abs() > 1e-4, "shear source should be active: {exact:?}");
        let vg = VelocityGrid::for_range(VelocityMode::Full3d, 40, &gas, 0.7 / gas.r, 0.18, 8.0).unwrap();
        let mut buf = vec![0.0; vg.local_len()];
        local::materialize_into(&vg, &theta, &mut buf);
        let (m, e) = local::flux_moments(&vg, &buf);
        let quad = [-e, -m[1], -m[2]];
        for k in 0..3 {
            assert!((quad[k] - exact[k]).abs() < 1e-7 * (1.0 + exact[k].abs()), "{k}: {} vs {}", quad[k], exact[k]);
        }
    }
}
