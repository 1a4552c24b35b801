//! The self-similar diffusion wave `θ̂(η)`, `η = x / √(1+t)`, solving
//! `(a(θ̂) θ̂')' + (η/2) θ̂' = 0` with `θ̂(±∞) = θ±`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::gas::PowerLaw;
use crate::numerics::fit;
use crate::numerics::interp::Tabulated;
use crate::numerics::{series, tridiag};
use crate::tolerances;
use statrs::function::erf::erf;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilarityOptions {
    /// The η-domain is `[-half_width, half_width]`.
    pub half_width: f64,
    pub n_nodes: usize,
    pub max_newton: usize,
}

impl Default for SimilarityOptions {
    fn default() -> Self {
        Self { half_width: 12.0, n_nodes: 8001, max_newton: 60 }
    }
}

/// Highest η-derivative stored per node (eval returns one order less).
const STORED_ORDER: usize = 5;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimilarityProfile {
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub delta: f64,
    pub a: PowerLaw,
    /// Sup norm of the discrete ODE residual at the returned solution.
    pub residual: f64,
    table: Tabulated,
}

impl SimilarityProfile {
    pub fn eta0(&self) -> f64 {
        self.table.x0
    }

    pub fn h(&self) -> f64 {
        self.table.h
    }

    pub fn n_nodes(&self) -> usize {
        self.table.len()
    }

    pub fn eta(&self, i: usize) -> f64 {
        self.table.node(i)
    }

    pub fn eta_grid(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.eta(i)).collect()
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.table.derivs[0]
    }

    pub fn dtheta_hat(&self) -> &[f64] {
        &self.table.derivs[1]
    }

    /// `k`-th η-derivative at node `i`, `k ≤ 5`.
    pub fn node_deriv(&self, k: usize, i: usize) -> f64 {
        self.table.derivs[k][i]
    }

    /// `[θ̂, θ̂', θ̂'', θ̂''', θ̂'''']` at `η`.
    pub fn eval(&self, eta: f64) -> Vec<f64> {
        self.table.eval(eta)
    }

    pub fn value(&self, eta: f64) -> f64 {
        self.table.value(eta)
    }

    pub fn is_constant(&self) -> bool {
        self.delta == 0.0
    }

    /// Fitted Gaussian tail rates `-d ln|θ̂'| / d(η²)` over the outer part
    /// of each half-line, to compare with `1/(4 a(θ±))`.
    pub fn tail_rates(&self) -> Result<(f64, f64)> {
        if self.is_constant() {
            return Err(Error::InsufficientData("constant profile has no tail".into()));
        }
        let l = -self.eta0();
        let rate = |sign: f64| -> Result<f64> {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for i in 0..self.n_nodes() {
                let e = self.eta(i) * sign;
                let d = self.dtheta_hat()[i].abs();
                if e >= 0.35 * l && e <= 0.7 * l && d > 1e-280 {
                    xs.push(e * e);
                    ys.push(d.ln());
                }
            }
            if xs.len() < 3 {
                return Err(Error::InsufficientData("too few tail samples".into()));
            }
            Ok(-fit::linear(&xs, &ys).0)
        };
        Ok((rate(-1.0)?, rate(1.0)?))
    }

    /// Checks monotonicity, bounds and one-signedness of `θ̂'`.
    pub fn check_invariants(&self) -> Result<()> {
        let (lo, hi) = (self.theta_minus.min(self.theta_plus), self.theta_minus.max(self.theta_plus));
        let th = self.theta_hat();
        let tol = 1e-12 * hi;
        if let Some(v) = th.iter().find(|v| **v < lo - tol || **v > hi + tol) {
            return Err(Error::NonMonotone(format!("θ̂ = {v} leaves [{lo}, {hi}]")));
        }
        if self.is_constant() {
            return Ok(());
        }
        let s = (self.theta_plus - self.theta_minus).signum();
        for i in 1..th.len() {
            if (th[i] - th[i - 1]) * s < 0.0 {
                return Err(Error::NonMonotone(format!("θ̂ decreases against the far-field ordering at node {i}")));
            }
        }
        // Differencing round-off floor on θ̂'.
        let floor = 64.0 * f64::EPSILON * hi / self.h();
        if let Some(i) = self.dtheta_hat().iter().position(|d| d * s < -floor) {
            return Err(Error::NonMonotone(format!("θ̂' changes sign at node {i}")));
        }
        Ok(())
    }
}

/// Solves the similarity BVP by damped Newton on a second-order
/// flux-form discretization.
pub fn solve_theta_hat(theta_minus: f64, theta_plus: f64, a: PowerLaw, opts: &SimilarityOptions) -> Result<SimilarityProfile> {
    if !(theta_minus > 0.0 && theta_plus > 0.0) {
        return Err(Error::Config(format!("far-field temperatures must be positive, got {theta_minus}, {theta_plus}")));
    }
    if opts.n_nodes < 5 || !(opts.half_width > 0.0) {
        return Err(Error::Config("similarity grid needs ≥ 5 nodes and a positive width".into()));
    }
    let n = opts.n_nodes;
    let l = opts.half_width;
    let h = 2.0 * l / (n - 1) as f64;
    let eta: Vec<f64> = (0..n).map(|i| -l + h * i as f64).collect();
    let delta = (theta_plus - theta_minus).abs();
    if delta == 0.0 {
        let mut derivs = vec![vec![0.0; n]; STORED_ORDER + 1];
        derivs[0] = vec![theta_minus; n];
        return Ok(SimilarityProfile {
            theta_minus,
            theta_plus,
            delta,
            a,
            residual: 0.0,
            table: Tabulated::new(-l, h, derivs),
        });
    }

    let a0 = a.value(0.5 * (theta_minus + theta_plus));
    let mut th: Vec<f64> = eta
        .iter()
        .map(|e| theta_minus + (theta_plus - theta_minus) * 0.5 * (1.0 + erf(e / (2.0 * a0.sqrt()))))
        .collect();
    th[0] = theta_minus;
    th[n - 1] = theta_plus;

    let residual = |th: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; n];
        for i in 1..n - 1 {
            let ar = a.value(0.5 * (th[i] + th[i + 1]));
            let al = a.value(0.5 * (th[i] + th[i - 1]));
            r[i] = (ar * (th[i + 1] - th[i]) - al * (th[i] - th[i - 1])) / (h * h)
                + eta[i] * (th[i + 1] - th[i - 1]) / (4.0 * h);
        }
        r
    };
    let sup = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut r = residual(&th);
    let mut rn = sup(&r);
    let target = 0.01 * tolerances::BVP_RESIDUAL;
    let mut it = 0;
    while rn > target && it < opts.max_newton {
        it += 1;
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let dr = a.derivs(0.5 * (th[i] + th[i + 1]), 2);
            let dl = a.derivs(0.5 * (th[i] + th[i - 1]), 2);
            let gr = th[i + 1] - th[i];
            let gl = th[i] - th[i - 1];
            let c = eta[i] / (4.0 * h);
            let hh = h * h;
            lower[i] = (dl[0] - 0.5 * dl[1] * gl) / hh - c;
            diag[i] = (-dr[0] + 0.5 * dr[1] * gr - dl[0] - 0.5 * dl[1] * gl) / hh;
            upper[i] = (dr[0] + 0.5 * dr[1] * gr) / hh + c;
            rhs[i] = -r[i];
        }
        let d = tridiag::solve(&lower, &diag, &upper, &rhs)?;
        let mut lam = 1.0;
        let step = loop {
            let trial: Vec<f64> = th.iter().zip(&d).map(|(t, s)| t + lam * s).collect();
            let rt = residual(&trial);
            let rtn = sup(&rt);
            if rtn < rn || lam < 1e-6 {
                th = trial;
                r = rt;
                rn = rtn;
                break lam * sup(&d);
            }
            lam *= 0.5;
        };
        // Below this the discrete residual is at its round-off floor.
        if step < 1e-15 * theta_plus.max(theta_minus) {
            break;
        }
    }
    if !(rn <= tolerances::BVP_RESIDUAL) {
        return Err(Error::NoConvergence { what: "similarity BVP", iterations: it, residual: rn });
    }

    let dth = derivative(&th, h);
    let mut derivs = vec![vec![0.0; n]; STORED_ORDER + 1];
    for i in 0..n {
        let d = higher_derivatives(&a, eta[i], th[i], dth[i], STORED_ORDER);
        for (k, v) in d.into_iter().enumerate() {
            derivs[k][i] = v;
        }
    }
    let prof = SimilarityProfile { theta_minus, theta_plus, delta, a, residual: rn, table: Tabulated::new(-l, h, derivs) };
    prof.check_invariants()?;
    Ok(prof)
}

/// Fourth-order central differences, second order near the ends.
pub(crate) fn derivative(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = if i >= 2 && i + 2 < n {
            (8.0 * (y[i + 1] - y[i - 1]) - (y[i + 2] - y[i - 2])) / (12.0 * h)
        } else if i >= 1 && i + 1 < n {
            (y[i + 1] - y[i - 1]) / (2.0 * h)
        } else if i == 0 {
            (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
        } else {
            (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h)
        };
    }
    d
}

/// `[θ, θ', ..., θ^(order)]` at one point from `(θ, θ')` and the ODE in flux
/// form `F = a(θ) θ'`, `F' = -(η/2) θ'`, by Taylor-series recursion.
pub fn higher_derivatives(a: &PowerLaw, eta0: f64, theta: f64, dtheta: f64, order: usize) -> Vec<f64> {
    let m = order + 1;
    let mut t = vec![0.0; m];
    t[0] = theta;
    if m > 1 {
        t[1] = dtheta;
    }
    let ad = a.derivs(theta, m);
    // d_k = (k+1) t_{k+1} are the Taylor coefficients of θ'.
    for k in 0..m.saturating_sub(2) {
        let aser = series::compose(&ad, &t, m);
        let d = |j: usize, t: &[f64]| (j + 1) as f64 * t[j + 1];
        let dk = d(k, &t);
        let dkm = if k > 0 { d(k - 1, &t) } else { 0.0 };
        let fkp = -(eta0 * dk + dkm) / (2.0 * (k + 1) as f64);
        let mut s = fkp;
        for j in 1..=k + 1 {
            s -= aser[j] * d(k + 1 - j, &t);
        }
        t[k + 2] = s / (aser[0] * (k + 2) as f64);
    }
    series::to_derivs(&t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_far_fields_give_constant_profile() {
        let p = solve_theta_hat(1.0, 1.0, PowerLaw::constant(1.0), &SimilarityOptions::default()).unwrap();
        assert!(p.theta_hat().iter().all(|v| *v == 1.0));
        assert!(p.dtheta_hat().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn series_derivatives_satisfy_ode() {
        let a = PowerLaw { c: 1.0, p: -0.5 };
        let d = higher_derivatives(&a, 0.7, 1.05, 0.02, 5);
        let av = a.derivs(1.05, 2);
        let resid = av[0] * d[2] + av[1] * d[1] * d[1] + 0.35 * d[1];
        assert!(resid.abs() < 1e-16);
    }
}
