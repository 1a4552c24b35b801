//! The assembled ansatz `(v̄, εū, θ̄)` in Lagrangian coordinates and its
//! residuals in the fluid-type system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::gas::{GasModel, PowerLaw};
use crate::numerics::fit::{self, PowerFit};
use crate::numerics::jet::Jet;
use crate::numerics::scalar::Dual;
use crate::profile_builder::corrections::CorrectionProfile;
use crate::profile_builder::micro::{self, LocalJet};
use crate::profile_builder::similarity::SimilarityProfile;

/// Similarity profile plus corrections, assembled at a fixed `ε`.
#[derive(Clone, Debug)]
pub struct AnsatzProfile {
    pub sim: SimilarityProfile,
    pub corr: CorrectionProfile,
    pub gas: GasModel,
    pub eps: f64,
}

/// Jets in `(x, t)` of every ansatz field at one Lagrangian point.
#[derive(Clone, Copy, Debug)]
pub struct AnsatzPoint {
    pub x: f64,
    pub t: f64,
    pub eta: f64,
    pub theta_hat: Jet,
    pub theta_nf: Jet,
    /// `a(θ̂)`.
    pub a: Jet,
    pub v: Jet,
    /// Scaled velocity `ū` (the physical velocity is `εū`). Valid to order 2.
    pub u: [Jet; 3],
    /// Valid to order 2.
    pub theta: Jet,
    /// Diffusion-wave velocity `ũ1 = a(θ̂) θ̂_x`.
    pub u_wave: Jet,
}

/// Values and first two x-derivatives of the fields at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSample {
    pub x: f64,
    pub v: [f64; 3],
    pub u: [[f64; 3]; 3],
    pub theta: [f64; 3],
}

fn law(j: &Jet, p: &PowerLaw) -> Jet {
    j.compose(&p.derivs(j.value(), 4))
}

fn law_prime(p: &PowerLaw) -> PowerLaw {
    PowerLaw { c: p.c * p.p, p: p.p - 1.0 }
}

fn x_derivs(j: &Jet) -> [f64; 3] {
    [j.value(), j.deriv(1, 0), j.deriv(2, 0)]
}

impl AnsatzProfile {
    pub fn new(sim: SimilarityProfile, corr: CorrectionProfile, gas: GasModel, eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("ε must be finite and non-negative, got {eps}")));
        }
        if corr.g[0].len() != sim.n_nodes() {
            return Err(Error::GridMismatch("corrections and similarity profile use different η grids".into()));
        }
        Ok(Self { sim, corr, gas, eps })
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.sim.clone(), self.corr.clone(), self.gas, eps)
    }

    /// Far-field pressure `p+ = Rθ+/v+`.
    pub fn p_plus(&self) -> f64 {
        self.gas.r
    }

    pub fn point(&self, x: f64, t: f64) -> AnsatzPoint {
        let eps = self.eps;
        let s = (Jet::var_t(t) + 1.0).powf(-0.5);
        let eta = Jet::var_x(x) * s;
        let e = eta.value();
        let theta_hat = eta.compose(&self.sim.eval(e));
        let theta_nf = eta.compose(&self.corr.gprime(0, e)) * s;
        let al = self.gas.a_law();
        let a = law(&theta_hat, &al);
        let ap = law(&theta_hat, &law_prime(&al));
        let th_x = theta_hat.diff_x();
        let u_wave = a * th_x;
        let u1 = u_wave + (a * theta_nf.diff_x() + ap * th_x * theta_nf) * eps;
        let u2 = eta.compose(&self.corr.gprime(1, e)) * s;
        let u3 = eta.compose(&self.corr.gprime(2, e)) * s;
        let v = theta_hat + theta_nf * eps;
        let ke = (u1 * u1 + u2 * u2 + u3 * u3) * (0.5 * eps * eps);
        let theta = v - ke;
        AnsatzPoint { x, t, eta: e, theta_hat, theta_nf, a, v, u: [u1, u2, u3], theta, u_wave }
    }

    pub fn sample(&self, x: f64, t: f64) -> AnsatzSample {
        let p = self.point(x, t);
        AnsatzSample {
            x,
            v: x_derivs(&p.v),
            u: [x_derivs(&p.u[0]), x_derivs(&p.u[1]), x_derivs(&p.u[2])],
            theta: x_derivs(&p.theta),
        }
    }

    /// Samples on a lattice; fails if `v̄` or `θ̄` is not positive.
    pub fn fields(&self, xs: &[f64], t: f64) -> Result<Vec<AnsatzSample>> {
        let out: Vec<AnsatzSample> = xs.iter().map(|&x| self.sample(x, t)).collect();
        if let Some(s) = out.iter().find(|s| !(s.v[0] > 0.0 && s.theta[0] > 0.0)) {
            return Err(Error::NegativeProfile(format!(
                "v̄ = {:e}, θ̄ = {:e} at x = {}, t = {t}",
                s.v[0], s.theta[0], s.x
            )));
        }
        Ok(out)
    }

    /// Gap `max(|v̄ - ṽ|, |ū1 - ũ1|, |θ̄ - θ̃|)` at one point.
    pub fn gap(&self, x: f64, t: f64) -> f64 {
        let p = self.point(x, t);
        let th = p.theta_hat.value();
        (p.v.value() - th)
            .abs()
            .max((p.u[0].value() - p.u_wave.value()).abs())
            .max((p.theta.value() - th).abs())
    }

    /// Leading microscopic state used for `N̄_i` at this point.
    pub fn local_jet(&self, p: &AnsatzPoint) -> LocalJet {
        let eps = self.eps;
        let r = self.gas.r;
        let d = |j: Jet| Dual::new(j.value(), j.dx());
        let rv = p.v.recip();
        let w = [0, 1, 2].map(|i| d(p.u[i] * eps));
        let w_grad = [0, 1, 2].map(|i| d(p.u[i].diff_x() * rv * eps));
        LocalJet {
            rho: d(rv),
            w,
            t: d(p.theta * r),
            v: d(p.v),
            w_grad,
            t_grad: d(p.theta.diff_x() * rv * r),
        }
    }

    /// `N̂_i(x, t) = D_i(η)/(1+t)`.
    pub fn nhat(&self, p: &AnsatzPoint) -> [f64; 3] {
        [0, 1, 2].map(|i| self.corr.source(i, p.eta) / (1.0 + p.t))
    }

    /// `N̄_i` at the ansatz state.
    pub fn nbar(&self, p: &AnsatzPoint) -> [f64; 3] {
        if self.sim.is_constant() && self.corr.is_zero() {
            return [0.0; 3];
        }
        micro::n_moments(&micro::theta11(&self.local_jet(p), &self.gas))
    }

    /// `R̄1 .. R̄4` at one point (the `i = 2, 3` entries are `R̄2, R̄3`).
    pub fn residual(&self, x: f64, t: f64) -> ResidualPoint {
        let p = self.point(x, t);
        let eps = self.eps;
        let e2 = eps * eps;
        let gas = &self.gas;
        let v = p.v.value();
        let th = p.theta.value();
        let th_hat = p.theta_hat.value();
        let mu_bar = gas.mu(th) / v;
        let u = [p.u[0].value(), p.u[1].value(), p.u[2].value()];
        let ux = [p.u[0].dx(), p.u[1].dx(), p.u[2].dx()];
        let p_bar = gas.r * th / v;
        let dp = p_bar - self.p_plus();
        let nhat = self.nhat(&p);
        let nbar = self.nbar(&p);

        let a_th_t = (p.a * p.theta_hat.diff_t()).value();
        let a_nf_t = (p.a * p.theta_nf).dt();
        let r1 = e2 * a_th_t + e2 * eps * a_nf_t + dp - (4.0 / 3.0) * e2 * mu_bar * ux[0];
        let r_tr = |i: usize| e2 * (gas.mu(th_hat) / th_hat - mu_bar) * ux[i] + e2 * (nhat[i] - nbar[i]);
        let h_bar = eps * e2 * mu_bar * ((4.0 / 3.0) * u[0] * ux[0] + u[1] * ux[1] + u[2] * ux[2]);
        let r4 = (5.0 / 3.0) * eps * u[0] - eps * gas.kappa(th) / v * p.theta.dx() + dp * eps * u[0]
            + e2 * (nhat[0] - nbar[0])
            - h_bar;
        ResidualPoint { x, t, r: [r1, r_tr(1), r_tr(2), r4], nhat, nbar, pressure_defect: dp }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub x: f64,
    pub t: f64,
    /// `[R̄1, R̄2, R̄3, R̄4]`.
    pub r: [f64; 4],
    pub nhat: [f64; 3],
    pub nbar: [f64; 3],
    /// `p̄ - p+`.
    pub pressure_defect: f64,
}

/// Sup-norms over a lattice at one `(ε, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub eps: f64,
    pub t: f64,
    pub sup_r: [f64; 4],
    pub sup_nhat: [f64; 3],
    pub sup_pressure_defect: f64,
    pub sup_gap: f64,
}

/// Lagrangian lattice `x = η √(1+t)` for `η` uniform on `[-eta_max, eta_max]`.
pub fn similarity_lattice(t: f64, eta_max: f64, n: usize) -> Vec<f64> {
    let s = (1.0 + t).sqrt();
    (0..n).map(|i| s * (-eta_max + 2.0 * eta_max * i as f64 / (n - 1) as f64)).collect()
}

pub fn residual_sample(ans: &AnsatzProfile, t: f64, xs: &[f64]) -> ResidualSample {
    let mut out = ResidualSample {
        eps: ans.eps,
        t,
        sup_r: [0.0; 4],
        sup_nhat: [0.0; 3],
        sup_pressure_defect: 0.0,
        sup_gap: 0.0,
    };
    for &x in xs {
        let r = ans.residual(x, t);
        for k in 0..4 {
            out.sup_r[k] = out.sup_r[k].max(r.r[k].abs());
        }
        for k in 0..3 {
            out.sup_nhat[k] = out.sup_nhat[k].max(r.nhat[k].abs());
        }
        out.sup_pressure_defect = out.sup_pressure_defect.max(r.pressure_defect.abs());
        out.sup_gap = out.sup_gap.max(ans.gap(x, t));
    }
    out
}

/// Residual sup-norms on an `(ε, t)` sweep with fitted exponents.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    pub samples: Vec<ResidualSample>,
    /// Per t: ε-exponents of `‖R̄1..4‖∞`, the pressure defect and the gap.
    pub eps_fits: Vec<(f64, Vec<PowerFit>)>,
    /// Per ε: (1+t)-exponents of `‖R̄1..4‖∞`.
    pub time_fits: Vec<(f64, Vec<PowerFit>)>,
    /// δ-scaling of `sup|N̂1|`, when measured.
    pub nhat_delta_fit: Option<PowerFit>,
}

impl ResidualReport {
    /// Smallest ε-exponent of quantity `k` over the sampled times
    /// (`k < 4`: residuals, `4`: pressure defect, `5`: gap).
    pub fn min_eps_exponent(&self, k: usize) -> f64 {
        self.eps_fits.iter().map(|(_, f)| f[k].exponent).fold(f64::INFINITY, f64::min)
    }

    /// Largest t-exponent of `‖R̄_{k+1}‖∞` over the sampled ε.
    pub fn max_time_exponent(&self, k: usize) -> f64 {
        self.time_fits.iter().map(|(_, f)| f[k].exponent).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn residual_sweep(base: &AnsatzProfile, eps_list: &[f64], times: &[f64], eta_max: f64, n_x: usize) -> Result<ResidualReport> {
    let mut samples = Vec::new();
    for &eps in eps_list {
        let ans = base.with_eps(eps)?;
        for &t in times {
            let xs = similarity_lattice(t, eta_max, n_x);
            ans.fields(&xs, t)?;
            samples.push(residual_sample(&ans, t, &xs));
        }
    }
    let pick = |s: &ResidualSample, k: usize| match k {
        0..=3 => s.sup_r[k],
        4 => s.sup_pressure_defect,
        _ => s.sup_gap,
    };
    let mut eps_fits = Vec::new();
    if eps_list.len() >= 2 {
        for &t in times {
            let row: Vec<&ResidualSample> = samples.iter().filter(|s| s.t == t).collect();
            let x: Vec<f64> = row.iter().map(|s| s.eps).collect();
            let fits = (0..6)
                .map(|k| fit::power_law(&x, &row.iter().map(|s| pick(s, k)).collect::<Vec<_>>(), 2))
                .collect::<Result<Vec<_>>>()?;
            eps_fits.push((t, fits));
        }
    }
    let mut time_fits = Vec::new();
    if times.len() >= 2 {
        for &eps in eps_list {
            let row: Vec<&ResidualSample> = samples.iter().filter(|s| s.eps == eps).collect();
            let x: Vec<f64> = row.iter().map(|s| 1.0 + s.t).collect();
            let fits = (0..4)
                .map(|k| fit::power_law(&x, &row.iter().map(|s| s.sup_r[k]).collect::<Vec<_>>(), 2))
                .collect::<Result<Vec<_>>>()?;
            time_fits.push((eps, fits));
        }
    }
    Ok(ResidualReport { samples, eps_fits, time_fits, nhat_delta_fit: None })
}
