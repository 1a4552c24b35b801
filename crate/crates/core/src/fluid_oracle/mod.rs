//! Implicit solvers for the scalar nonlinear diffusion equation
//! `θ_t = (a(θ) θ_x)_x` and the linear correction equations
//! `φ_t = (c φ_x)_x + (b φ)_x + s`, used as independent oracles for the
//! similarity boundary-value problems.
//!
//! Both use backward Euler in time and second-order flux-form differences on
//! a uniform node grid with Dirichlet end values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::gas::PowerLaw;
use crate::numerics::tridiag;

/// Uniform node grid `x_i = x0 + i dx`, `i = 0..n`, plus a time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
    pub dt: f64,
}

impl Grid1D {
    /// `[-half, half]` with at most `dx_max` spacing.
    pub fn symmetric(half: f64, dx_max: f64, dt: f64) -> Result<Self> {
        if !(half > 0.0 && dx_max > 0.0 && dt > 0.0) {
            return Err(Error::Config(format!("invalid oracle grid: half={half}, dx={dx_max}, dt={dt}")));
        }
        let cells = (2.0 * half / dx_max).ceil() as usize;
        Ok(Self { x0: -half, dx: 2.0 * half / cells as f64, n: cells + 1, dt })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.dx * i as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn half_width(&self) -> f64 {
        -self.x0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub t: f64,
}

impl ScalarField {
    pub fn from_fn(grid: &Grid1D, t: f64, f: impl Fn(f64) -> f64) -> Self {
        Self { values: grid.nodes().into_iter().map(f).collect(), t }
    }

    /// `Σ dx (θ_i - background)` over interior nodes.
    pub fn excess(&self, grid: &Grid1D, background: impl Fn(f64) -> f64) -> f64 {
        let n = self.values.len();
        (1..n - 1).map(|i| self.values[i] - background(grid.x(i))).sum::<f64>() * grid.dx
    }
}

const NEWTON_MAX: usize = 50;

/// One backward-Euler step of `θ_t = (a(θ) θ_x)_x` with face coefficients
/// `a((θ_i + θ_{i+1})/2)`, solved by Newton.
pub fn step_nonlinear_diffusion(grid: &Grid1D, field: &ScalarField, a: &PowerLaw, dt: f64) -> Result<ScalarField> {
    let n = field.values.len();
    if n != grid.n || n < 3 {
        return Err(Error::GridMismatch(format!("field has {n} nodes, grid {}", grid.n)));
    }
    if let Some(v) = field.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Config(format!("nonlinear diffusion requires a positive field, found {v}")));
    }
    let old = &field.values;
    let r = dt / (grid.dx * grid.dx);
    let mut th = old.clone();
    let scale = old.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut res_norm = f64::INFINITY;
    for _ in 0..NEWTON_MAX {
        // Face coefficients and their derivatives in θ_i, θ_{i+1}.
        let mut af = vec![0.0; n - 1];
        let mut daf = vec![0.0; n - 1];
        for i in 0..n - 1 {
            let m = 0.5 * (th[i] + th[i + 1]);
            let d = a.derivs(m, 2);
            af[i] = d[0];
            daf[i] = 0.5 * d[1];
        }
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        res_norm = 0.0;
        for i in 1..n - 1 {
            let fr = af[i] * (th[i + 1] - th[i]);
            let fl = af[i - 1] * (th[i] - th[i - 1]);
            let res = th[i] - old[i] - r * (fr - fl);
            res_norm = res_norm.max(res.abs());
            // ∂res/∂θ_{i-1}, θ_i, θ_{i+1}
            let dfr_i = -af[i] + daf[i] * (th[i + 1] - th[i]);
            let dfr_ip = af[i] + daf[i] * (th[i + 1] - th[i]);
            let dfl_im = -af[i - 1] + daf[i - 1] * (th[i] - th[i - 1]);
            let dfl_i = af[i - 1] + daf[i - 1] * (th[i] - th[i - 1]);
            lower[i] = r * dfl_im;
            diag[i] = 1.0 - r * (dfr_i - dfl_i);
            upper[i] = -r * dfr_ip;
            rhs[i] = -res;
        }
        if res_norm <= 1e-15 * scale {
            return Ok(ScalarField { values: th, t: field.t + dt });
        }
        let d = tridiag::solve(&lower, &diag, &upper, &rhs)?;
        let mut step: f64 = 0.0;
        for i in 1..n - 1 {
            th[i] += d[i];
            step = step.max(d[i].abs());
        }
        if step <= 1e-15 * scale {
            return Ok(ScalarField { values: th, t: field.t + dt });
        }
    }
    Err(Error::NoConvergence { what: "nonlinear diffusion step", iterations: NEWTON_MAX, residual: res_norm })
}

/// One backward-Euler step of `φ_t = (c φ_x)_x + (b φ)_x + s`.
///
/// `coeff`, `drift` and `source` are node values at the new time level; the
/// end values of `field` are kept.
pub fn step_linear_correction(
    grid: &Grid1D,
    field: &ScalarField,
    coeff: &[f64],
    drift: &[f64],
    source: &[f64],
    dt: f64,
) -> Result<ScalarField> {
    let n = field.values.len();
    if [coeff.len(), drift.len(), source.len(), grid.n].iter().any(|&l| l != n) {
        return Err(Error::GridMismatch("linear correction inputs differ in length".into()));
    }
    let r = dt / (grid.dx * grid.dx);
    let q = dt / (2.0 * grid.dx);
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = field.values.clone();
    for i in 1..n - 1 {
        let cr = 0.5 * (coeff[i] + coeff[i + 1]);
        let cl = 0.5 * (coeff[i] + coeff[i - 1]);
        lower[i] = -r * cl + q * drift[i - 1];
        diag[i] = 1.0 + r * (cl + cr);
        upper[i] = -r * cr - q * drift[i + 1];
        rhs[i] += dt * source[i];
    }
    let values = tridiag::solve(&lower, &diag, &upper, &rhs)?;
    Ok(ScalarField { values, t: field.t + dt })
}

/// Integrates the nonlinear diffusion equation to `t_end` with uniform steps.
pub fn evolve_nonlinear(grid: &Grid1D, init: &ScalarField, a: &PowerLaw, t_end: f64) -> Result<ScalarField> {
    let steps = ((t_end - init.t) / grid.dt).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(init.clone());
    }
    let dt = (t_end - init.t) / steps as f64;
    let mut f = init.clone();
    for _ in 0..steps {
        f = step_nonlinear_diffusion(grid, &f, a, dt)?;
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_is_unchanged() {
        let g = Grid1D::symmetric(4.0, 0.1, 0.01).unwrap();
        let f = ScalarField::from_fn(&g, 0.0, |_| 1.3);
        let a = PowerLaw { c: 1.0, p: -0.5 };
        let s = step_nonlinear_diffusion(&g, &f, &a, 0.1).unwrap();
        assert!(s.values.iter().all(|v| *v == 1.3));
    }

    #[test]
    fn maximum_principle_and_conservation() {
        let g = Grid1D::symmetric(10.0, 0.05, 0.05).unwrap();
        let f = ScalarField::from_fn(&g, 0.0, |x| 1.0 + 0.3 * (-x * x).exp() - 0.1 * (-(x - 2.0).powi(2)).exp());
        let a = PowerLaw { c: 0.8, p: -0.5 };
        let (lo, hi) = f.values.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
        let before = f.excess(&g, |_| 1.0);
        let s = step_nonlinear_diffusion(&g, &f, &a, 0.05).unwrap();
        assert!(s.values.iter().all(|v| *v >= lo - 1e-14 && *v <= hi + 1e-14));
        let after = s.excess(&g, |_| 1.0);
        assert!(((after - before) / before).abs() < 1e-10, "{before} {after}");
    }

    #[test]
    fn zero_source_zero_field_stays_zero() {
        let g = Grid1D::symmetric(3.0, 0.1, 0.1).unwrap();
        let f = ScalarField::from_fn(&g, 0.0, |_| 0.0);
        let ones = vec![1.0; g.n];
        let zeros = vec![0.0; g.n];
        let s = step_linear_correction(&g, &f, &ones, &ones, &zeros, 0.1).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_coefficient_erf_matches_heat_kernel() {
        use statrs::function::erf::erf;
        let a0 = 0.9;
        let exact = |x: f64, t: f64| 1.0 + 0.05 * (1.0 + erf(x / (2.0 * (a0 * (1.0 + t)).sqrt())));
        let g = Grid1D::symmetric(20.0, 0.02, 0.002).unwrap();
        let init = ScalarField::from_fn(&g, 0.0, |x| exact(x, 0.0));
        let out = evolve_nonlinear(&g, &init, &PowerLaw::constant(a0), 4.0).unwrap();
        let err = g.nodes().iter().zip(&out.values).fold(0.0f64, |m, (x, v)| m.max((v - exact(*x, 4.0)).abs()));
        assert!(err <= 1e-4, "{err}");
    }

    fn manufactured_error(dx: f64, dt: f64) -> f64 {
        use std::f64::consts::PI;
        let g = Grid1D::symmetric(PI, dx, dt).unwrap();
        let xs = g.nodes();
        let b = 0.3;
        let coeff: Vec<f64> = xs.iter().map(|x| 1.0 + 0.2 * x * x).collect();
        let drift = vec![b; g.n];
        let exact = |x: f64, t: f64| (-t).exp() * x.sin();
        let mut f = ScalarField::from_fn(&g, 0.0, |x| exact(x, 0.0));
        let steps = (1.0 / dt).round() as usize;
        for _ in 0..steps {
            let t = f.t + dt;
            let e = (-t).exp();
            // s = φ_t - (cφ_x)_x - (bφ)_x
            let source: Vec<f64> = xs
                .iter()
                .map(|x| {
                    let c = 1.0 + 0.2 * x * x;
                    -e * x.sin() - (0.4 * x * e * x.cos() - c * e * x.sin()) - b * e * x.cos()
                })
                .collect();
            f = step_linear_correction(&g, &f, &coeff, &drift, &source, dt).unwrap();
        }
        xs.iter().zip(&f.values).fold(0.0f64, |m, (x, v)| m.max((v - exact(*x, f.t)).abs()))
    }

    #[test]
    fn manufactured_solution_converges() {
        let coarse = manufactured_error(0.1, 0.02);
        let fine = manufactured_error(0.05, 0.01);
        assert!(coarse < 2e-2, "{coarse}");
        assert!(coarse / fine >= 2.0 - 1e-3, "{coarse} {fine}");
    }
}
