//! Discrete operations on the velocity function of a single spatial cell.
//!
//! A local function is a slice of `grid.local_len()` values. Reduced layout:
//! `[m0 | m2 | h2 | h3]`, each block over the ξ1 nodes. Full3d layout:
//! index `(i1 · n + i2) · n + i3`.

use crate::error::{Error, Result};
use crate::kinetic_model::gas::{GasModel, PrandtlMode};
use crate::kinetic_model::macrostate::{Conserved, MacroState};
use crate::kinetic_model::poly::{Gauss, Poly, PolyM, MAX_DEGREE};
use crate::kinetic_model::velocity::{VelocityGrid, VelocityMode};
use crate::numerics::{dense, gauss_moment};
use crate::tolerances;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Collision-invariant moments by quadrature.
pub fn moments(grid: &VelocityGrid, f: &[f64]) -> Conserved {
    let n = grid.n_nodes();
    let (x, w) = (&grid.nodes, &grid.weights);
    match grid.mode {
        VelocityMode::Reduced => {
            let (m0, rest) = f.split_at(n);
            let (m2, rest) = rest.split_at(n);
            let (h2, h3) = rest.split_at(n);
            let mut c = Conserved::default();
            let mut e2 = 0.0;
            for k in 0..n {
                c.mass += w[k] * m0[k];
                c.momentum[0] += w[k] * x[k] * m0[k];
                c.momentum[1] += w[k] * h2[k];
                c.momentum[2] += w[k] * h3[k];
                e2 += w[k] * (x[k] * x[k] * m0[k] + m2[k]);
            }
            c.energy = 0.5 * e2;
            c
        }
        VelocityMode::Full3d => {
            let mut c = Conserved::default();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let v = w[i] * w[j] * w[k] * f[(i * n + j) * n + k];
                        c.mass += v;
                        c.momentum[0] += v * x[i];
                        c.momentum[1] += v * x[j];
                        c.momentum[2] += v * x[k];
                        c.energy += 0.5 * v * (x[i] * x[i] + x[j] * x[j] + x[k] * x[k]);
                    }
                }
            }
            c
        }
    }
}

/// `(ρ, εu, Rθ)` of `f` as Gaussian parameters.
pub fn moment_gauss(grid: &VelocityGrid, gas: &GasModel, f: &[f64], cell: usize) -> Result<Gauss<f64>> {
    let s = MacroState::from_conserved(&moments(grid, f), gas, 1.0, cell)?;
    Ok(s.gauss(gas, 1.0))
}

pub fn macro_state(grid: &VelocityGrid, gas: &GasModel, eps: f64, f: &[f64], cell: usize) -> Result<MacroState> {
    MacroState::from_conserved(&moments(grid, f), gas, eps, cell)
}

/// `[∫f, ∫c1 f, ∫c2 f, ∫c3 f, ∫|c|² f]` with `c = ξ - w`.
pub fn poly_moments(c: &Conserved, w: [f64; 3]) -> [f64; 5] {
    let m = c.mass;
    let p = c.momentum;
    let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    [
        m,
        p[0] - w[0] * m,
        p[1] - w[1] * m,
        p[2] - w[2] * m,
        2.0 * c.energy - 2.0 * (w[0] * p[0] + w[1] * p[1] + w[2] * p[2]) + w2 * m,
    ]
}

/// `([∫ξ1ξ1 f, ∫ξ1ξ2 f, ∫ξ1ξ3 f], ∫ξ1|ξ|²/2 f)` by quadrature.
pub fn flux_moments(grid: &VelocityGrid, f: &[f64]) -> ([f64; 3], f64) {
    let n = grid.n_nodes();
    let (x, w) = (&grid.nodes, &grid.weights);
    match grid.mode {
        VelocityMode::Reduced => {
            let mut m = [0.0; 3];
            let mut e = 0.0;
            for k in 0..n {
                m[0] += w[k] * x[k] * x[k] * f[k];
                m[1] += w[k] * x[k] * f[2 * n + k];
                m[2] += w[k] * x[k] * f[3 * n + k];
                e += w[k] * x[k] * (x[k] * x[k] * f[k] + f[n + k]);
            }
            (m, 0.5 * e)
        }
        VelocityMode::Full3d => {
            let mut m = [0.0; 3];
            let mut e = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let v = w[i] * w[j] * w[k] * f[(i * n + j) * n + k] * x[i];
                        m[0] += v * x[i];
                        m[1] += v * x[j];
                        m[2] += v * x[k];
                        e += 0.5 * v * (x[i] * x[i] + x[j] * x[j] + x[k] * x[k]);
                    }
                }
            }
            (m, e)
        }
    }
}

/// Heat flux `∫ c|c|²/2 f dξ` about `w`.
///
/// In reduced mode the transverse third moment is closed by the Gaussian
/// relation `∫ c_i |c⊥|² f dξ⊥ = 4T ∫ c_i f dξ⊥`, exact when the transverse
/// dependence is Gaussian with variance `T`.
pub fn heat_flux(grid: &VelocityGrid, f: &[f64], w: [f64; 3], t: f64) -> [f64; 3] {
    let n = grid.n_nodes();
    let (x, wt) = (&grid.nodes, &grid.weights);
    match grid.mode {
        VelocityMode::Reduced => {
            let (m0, rest) = f.split_at(n);
            let (m2, rest) = rest.split_at(n);
            let (h2, h3) = rest.split_at(n);
            let wp2 = w[1] * w[1] + w[2] * w[2];
            let mut q = [0.0; 3];
            for k in 0..n {
                let c1 = x[k] - w[0];
                let cperp2 = m2[k] - 2.0 * (w[1] * h2[k] + w[2] * h3[k]) + wp2 * m0[k];
                q[0] += wt[k] * c1 * (c1 * c1 * m0[k] + cperp2);
                let s = c1 * c1 + 4.0 * t;
                q[1] += wt[k] * s * (h2[k] - w[1] * m0[k]);
                q[2] += wt[k] * s * (h3[k] - w[2] * m0[k]);
            }
            [0.5 * q[0], 0.5 * q[1], 0.5 * q[2]]
        }
        VelocityMode::Full3d => {
            let mut q = [0.0; 3];
            for i in 0..n {
                let c1 = x[i] - w[0];
                for j in 0..n {
                    let c2 = x[j] - w[1];
                    for k in 0..n {
                        let c3 = x[k] - w[2];
                        let v = wt[i] * wt[j] * wt[k] * f[(i * n + j) * n + k];
                        let s = 0.5 * v * (c1 * c1 + c2 * c2 + c3 * c3);
                        q[0] += s * c1;
                        q[1] += s * c2;
                        q[2] += s * c3;
                    }
                }
            }
            q
        }
    }
}

/// Writes `p(ξ - w) M_g(ξ)` into `out` in the grid's layout.
///
/// Reduced mode integrates the transverse directions analytically.
pub fn materialize_into(grid: &VelocityGrid, pm: &PolyM<f64>, out: &mut [f64]) {
    let n = grid.n_nodes();
    let g = pm.g;
    let x = &grid.nodes;
    let inv = 1.0 / (SQRT_2PI * g.t.sqrt());
    match grid.mode {
        VelocityMode::Reduced => {
            // Per power of c1: transverse factors for m0, m2, h2, h3.
            let sq = g.t.sqrt();
            let e: Vec<f64> = (0..=MAX_DEGREE + 2).map(|k| gauss_moment(k) * sq.powi(k as i32)).collect();
            let (w2, w3) = (g.w[1], g.w[2]);
            let sh = |b: usize, wv: f64| e[b + 1] + wv * e[b];
            let sq2 = |b: usize, wv: f64| e[b + 2] + 2.0 * wv * e[b + 1] + wv * wv * e[b];
            let mut coef = [[0.0f64; MAX_DEGREE + 1]; 4];
            let exps = crate::kinetic_model::poly::exponents();
            for (idx, &cf) in pm.p.coef.iter().enumerate() {
                if cf == 0.0 {
                    continue;
                }
                let [a, b, c] = exps[idx];
                let (a, b, c) = (a as usize, b as usize, c as usize);
                coef[0][a] += cf * e[b] * e[c];
                coef[1][a] += cf * (sq2(b, w2) * e[c] + e[b] * sq2(c, w3));
                coef[2][a] += cf * sh(b, w2) * e[c];
                coef[3][a] += cf * e[b] * sh(c, w3);
            }
            let deg = pm.p.degree();
            for k in 0..n {
                let c1 = x[k] - g.w[0];
                let gk = g.rho * inv * (-0.5 * c1 * c1 / g.t).exp();
                for (blk, cb) in coef.iter().enumerate() {
                    let mut s = 0.0;
                    for a in (0..=deg).rev() {
                        s = s * c1 + cb[a];
                    }
                    out[blk * n + k] = s * gk;
                }
            }
        }
        VelocityMode::Full3d => {
            let gd: Vec<Vec<f64>> = (0..3)
                .map(|d| x.iter().map(|&v| inv * (-0.5 * (v - g.w[d]).powi(2) / g.t).exp()).collect())
                .collect();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let c = [x[i] - g.w[0], x[j] - g.w[1], x[k] - g.w[2]];
                        out[(i * n + j) * n + k] = g.rho * gd[0][i] * gd[1][j] * gd[2][k] * pm.p.eval(c);
                    }
                }
            }
        }
    }
}

pub fn materialize(grid: &VelocityGrid, pm: &PolyM<f64>) -> Vec<f64> {
    let mut out = vec![0.0; grid.local_len()];
    materialize_into(grid, pm, &mut out);
    out
}

/// Node sums `s_k = Σ w_j ξ_j^k g(ξ_j)` of a normalized 1D Gaussian, `k ≤ 4`,
/// and the node values themselves.
fn gauss_sums(grid: &VelocityGrid, w: f64, t: f64, vals: &mut [f64]) -> [f64; 5] {
    let inv = 1.0 / (SQRT_2PI * t.sqrt());
    let mut s = [0.0; 5];
    for (k, (&x, &wt)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
        let c = x - w;
        let g = inv * (-0.5 * c * c / t).exp();
        vals[k] = g;
        let wg = wt * g;
        s[0] += wg;
        s[1] += wg * x;
        s[2] += wg * x * x;
        s[3] += wg * x * x * x;
        s[4] += wg * x * x * x * x;
    }
    s
}

/// Ratios `s1/s0`, `s2/s0` and their `(w, T)` partial derivatives.
pub(crate) fn ratio_jacobian(s: &[f64; 5], w: f64, t: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let dw = |k: usize| (s[k + 1] - w * s[k]) / t;
    let dt = |k: usize| {
        let e2 = if k + 2 <= 4 { s[k + 2] } else { f64::NAN };
        (e2 - 2.0 * w * s[k + 1] + w * w * s[k]) / (2.0 * t * t) - s[k] / (2.0 * t)
    };
    let r1 = s[1] / s[0];
    let r2 = s[2] / s[0];
    let s0w = dw(0);
    let s0t = dt(0);
    let s1w = dw(1);
    let s1t = dt(1);
    let s2w = dw(2);
    let s2t = dt(2);
    let j = [
        [(s1w - r1 * s0w) / s[0], (s1t - r1 * s0t) / s[0]],
        [(s2w - r2 * s0w) / s[0], (s2t - r2 * s0t) / s[0]],
    ];
    ([r1, r2], j)
}

/// Gaussian parameters whose materialized Maxwellian has exactly the
/// discrete collision-invariant moments of `target`.
///
/// The transverse variance equals the fitted ξ1 variance so that `ln M` stays
/// a combination of collision invariants on the grid.
pub fn fit_maxwellian(grid: &VelocityGrid, target: &Gauss<f64>) -> Result<Gauss<f64>> {
    let n = grid.n_nodes();
    let mut vals = vec![0.0; n];
    let (rho, w, t) = (target.rho, target.w, target.t);
    match grid.mode {
        VelocityMode::Reduced => {
            let rhs2 = 3.0 * t + w[0] * w[0];
            let (mut wf, mut tf) = (w[0], t);
            for _ in 0..30 {
                let s = gauss_sums(grid, wf, tf, &mut vals);
                let (r, j) = ratio_jacobian(&s, wf, tf);
                let f = [r[0] - w[0], r[1] + 2.0 * tf - rhs2];
                if f[0].abs() <= tolerances::MAXWELLIAN_FIT_TOL * t.sqrt()
                    && f[1].abs() <= tolerances::MAXWELLIAN_FIT_TOL * t
                {
                    return Ok(Gauss { rho: rho / s[0], w: [wf, w[1], w[2]], t: tf });
                }
                let jac = [[j[0][0], j[0][1]], [j[1][0], j[1][1] + 2.0]];
                let d = dense::solve(jac, [-f[0], -f[1]], tolerances::RCOND_MIN)
                    .ok_or(Error::Singular("Maxwellian fit"))?;
                wf += d[0];
                tf += d[1];
                if !(tf > 0.0) {
                    break;
                }
            }
            Err(Error::NoConvergence { what: "Maxwellian fit", iterations: 30, residual: f64::NAN })
        }
        VelocityMode::Full3d => {
            let rhs_e = 3.0 * t + w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
            let mut wf = w;
            let mut tf = t;
            for _ in 0..30 {
                let mut f = [0.0; 4];
                let mut jac = [[0.0; 4]; 4];
                let mut s0 = [0.0; 3];
                for d in 0..3 {
                    let s = gauss_sums(grid, wf[d], tf, &mut vals);
                    s0[d] = s[0];
                    let (r, j) = ratio_jacobian(&s, wf[d], tf);
                    f[d] = r[0] - w[d];
                    f[3] += r[1];
                    jac[d][d] = j[0][0];
                    jac[d][3] = j[0][1];
                    jac[3][d] = j[1][0];
                    jac[3][3] += j[1][1];
                }
                f[3] -= rhs_e;
                let ok = (0..3).all(|d| f[d].abs() <= tolerances::MAXWELLIAN_FIT_TOL * t.sqrt())
                    && f[3].abs() <= tolerances::MAXWELLIAN_FIT_TOL * t;
                if ok {
                    return Ok(Gauss { rho: rho / (s0[0] * s0[1] * s0[2]), w: wf, t: tf });
                }
                let dlt = dense::solve(jac, [-f[0], -f[1], -f[2], -f[3]], tolerances::RCOND_MIN)
                    .ok_or(Error::Singular("Maxwellian fit"))?;
                for d in 0..3 {
                    wf[d] += dlt[d];
                }
                tf += dlt[3];
                if !(tf > 0.0) {
                    break;
                }
            }
            Err(Error::NoConvergence { what: "Maxwellian fit", iterations: 30, residual: f64::NAN })
        }
    }
}

/// Discrete Maxwellian for `state`: its recovered moments equal `state`.
pub fn maxwellian(grid: &VelocityGrid, gas: &GasModel, eps: f64, state: &MacroState) -> Result<Vec<f64>> {
    if !state.is_valid() {
        return Err(Error::DegenerateState { cell: 0, rho: state.rho, theta: state.theta });
    }
    let g = state.gauss(gas, eps);
    let wmax = g.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    grid.check_resolution(gas, state.theta, wmax)?;
    let fit = fit_maxwellian(grid, &g)?;
    Ok(materialize(grid, &PolyM::maxwellian(fit)))
}

/// Discrete `P0/P1` about the (fitted) Maxwellian with parameters `g`.
///
/// `P0 h = Σ α_i φ_i`, `φ = (1, c1, c2, c3, |c|²)·M`, with `α` solving the
/// discrete Gram system, so `P0` is idempotent and `P1 h` has vanishing
/// discrete ψ-moments up to round-off.
#[derive(Clone, Debug)]
pub struct Projector {
    pub g: Gauss<f64>,
    basis: Vec<Vec<f64>>,
    gram_t_inv: [[f64; 5]; 5],
}

pub fn basis_polys() -> [Poly<f64>; 5] {
    [Poly::constant(1.0), Poly::c(0), Poly::c(1), Poly::c(2), Poly::c_sq()]
}

impl Projector {
    pub fn new(grid: &VelocityGrid, g: Gauss<f64>) -> Result<Self> {
        let basis: Vec<Vec<f64>> =
            basis_polys().iter().map(|p| materialize(grid, &PolyM { g, p: p.clone() })).collect();
        let mut gt = [[0.0; 5]; 5];
        for (i, phi) in basis.iter().enumerate() {
            let m = poly_moments(&moments(grid, phi), g.w);
            for j in 0..5 {
                // transpose: row j, column i
                gt[j][i] = m[j];
            }
        }
        let gram_t_inv = dense::inverse(gt, tolerances::RCOND_MIN)
            .ok_or_else(|| Error::Resolution("ill-conditioned projection Gram matrix".into()))?;
        Ok(Self { g, basis, gram_t_inv })
    }

    /// Coefficients `α` of `P0 h` in the `φ` basis.
    pub fn coefficients(&self, grid: &VelocityGrid, h: &[f64]) -> [f64; 5] {
        let b = poly_moments(&moments(grid, h), self.g.w);
        let mut a = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 {
                a[i] += self.gram_t_inv[i][j] * b[j];
            }
        }
        a
    }

    pub fn p0(&self, grid: &VelocityGrid, h: &[f64]) -> Vec<f64> {
        let a = self.coefficients(grid, h);
        let mut out = vec![0.0; h.len()];
        for (ai, phi) in a.iter().zip(&self.basis) {
            for (o, p) in out.iter_mut().zip(phi) {
                *o += ai * p;
            }
        }
        out
    }

    pub fn p1(&self, grid: &VelocityGrid, h: &[f64]) -> Vec<f64> {
        let p0 = self.p0(grid, h);
        h.iter().zip(&p0).map(|(a, b)| a - b).collect()
    }

    /// Both projections at once.
    pub fn project(&self, grid: &VelocityGrid, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p0 = self.p0(grid, h);
        let p1 = h.iter().zip(&p0).map(|(a, b)| a - b).collect();
        (p0, p1)
    }
}

/// The five normalized macroscopic basis functions `χ0..χ4` about the
/// discrete Maxwellian of `state`.
pub fn chi_basis(grid: &VelocityGrid, gas: &GasModel, eps: f64, state: &MacroState) -> Result<(Gauss<f64>, [Poly<f64>; 5])> {
    let g = state.gauss(gas, eps);
    let fit = fit_maxwellian(grid, &g)?;
    let (rho, t) = (state.rho, g.t);
    let polys = [
        Poly::constant(1.0 / rho.sqrt()),
        Poly::c(0).scale(1.0 / (t * rho).sqrt()),
        Poly::c(1).scale(1.0 / (t * rho).sqrt()),
        Poly::c(2).scale(1.0 / (t * rho).sqrt()),
        Poly::c_sq().scale(1.0 / t).add(&Poly::constant(-3.0)).scale(1.0 / (6.0 * rho).sqrt()),
    ];
    let gram = chi_gram(grid, &fit, &polys);
    let dev = gram_deviation(&gram);
    if !(dev <= tolerances::GRAM_TOL) {
        return Err(Error::Resolution(format!("χ Gram matrix deviates from identity by {dev:e}")));
    }
    Ok((fit, polys))
}

/// `⟨χ_i, χ_j⟩_M = ∫ p_i p_j M dξ` by quadrature of the materialized product.
pub fn chi_gram(grid: &VelocityGrid, m: &Gauss<f64>, polys: &[Poly<f64>; 5]) -> [[f64; 5]; 5] {
    let mut out = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in i..5 {
            let f = materialize(grid, &PolyM { g: *m, p: polys[i].mul(&polys[j]) });
            let v = moments(grid, &f).mass;
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

pub fn gram_deviation(g: &[[f64; 5]; 5]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let e = if i == j { 1.0 } else { 0.0 };
            d = d.max((g[i][j] - e).abs());
        }
    }
    d
}

/// Collision target `M⁺ = M + P1 S[q(f)]` of the relaxation surrogate.
#[derive(Clone, Debug)]
pub struct Target {
    /// Moment-derived parameters `(ρ, εu, Rθ)`.
    pub state: Gauss<f64>,
    /// Fitted parameters of the discrete Maxwellian.
    pub fit: Gauss<f64>,
    pub nu: f64,
    pub q: [f64; 3],
    pub maxwellian: Vec<f64>,
    /// Projected Shakhov correction; empty in BGK mode.
    pub shakhov: Vec<f64>,
}

pub fn target(grid: &VelocityGrid, gas: &GasModel, f: &[f64], cell: usize) -> Result<Target> {
    let state = moment_gauss(grid, gas, f, cell)?;
    let fit = fit_maxwellian(grid, &state)?;
    let maxwellian = materialize(grid, &PolyM::maxwellian(fit));
    let q = heat_flux(grid, f, state.w, state.t);
    let nu = gas.collision_frequency(state.rho, state.t / gas.r);
    let shakhov = match gas.prandtl_mode {
        PrandtlMode::Bgk => Vec::new(),
        PrandtlMode::Shakhov => {
            let s = shakhov_discrete(grid, gas, &fit, state.rho, q);
            Projector::new(grid, fit)?.p1(grid, &s)
        }
    };
    Ok(Target { state, fit, nu, q, maxwellian, shakhov })
}

/// Materialized Shakhov term about the fitted Maxwellian, with the
/// prefactor taken at the true density.
fn shakhov_discrete(grid: &VelocityGrid, gas: &GasModel, fit: &Gauss<f64>, rho: f64, q: [f64; 3]) -> Vec<f64> {
    let mut s = PolyM::shakhov_term(*fit, q, gas);
    // The analytic prefactor uses the Gaussian's own density parameter.
    s.p = s.p.scale(fit.rho / rho);
    materialize(grid, &s)
}

/// `Q(f) = ν (M⁺[f] - f)`.
pub fn collision(grid: &VelocityGrid, gas: &GasModel, f: &[f64], cell: usize) -> Result<Vec<f64>> {
    let tg = target(grid, gas, f, cell)?;
    let mut out = Vec::with_capacity(f.len());
    for k in 0..f.len() {
        let s = if tg.shakhov.is_empty() { 0.0 } else { tg.shakhov[k] };
        out.push(tg.nu * (tg.maxwellian[k] + s - f[k]));
    }
    Ok(out)
}

/// Exact solution of `∂t f = ν/ε² (M⁺[f] - f)` over `tau`.
pub fn relax(grid: &VelocityGrid, gas: &GasModel, eps: f64, f: &[f64], tau: f64, cell: usize) -> Result<Vec<f64>> {
    let tg = target(grid, gas, f, cell)?;
    let lam = tau * tg.nu / (eps * eps);
    let e1 = (-lam).exp();
    let cs = shakhov_weight(gas.prandtl(), lam);
    Ok((0..f.len())
        .map(|k| {
            let m = tg.maxwellian[k];
            let s = if tg.shakhov.is_empty() { 0.0 } else { tg.shakhov[k] };
            m + e1 * (f[k] - m) + cs * s
        })
        .collect())
}

/// `(e^{-Pr λ} - e^{-λ}) / (1 - Pr)`, the weight of the initial Shakhov
/// correction in the exact relaxation.
pub fn shakhov_weight(pr: f64, lam: f64) -> f64 {
    if (1.0 - pr).abs() < 1e-14 {
        return lam * (-lam).exp();
    }
    ((-pr * lam).exp() - (-lam).exp()) / (1.0 - pr)
}

/// Discrete `L_M` about fitted parameters `fit` (true density `rho`).
pub struct Linearized {
    pub fit: Gauss<f64>,
    pub state: Gauss<f64>,
    pub nu: f64,
    proj: Projector,
    /// `q(P1 S[e_j])`, `j = 0..3`, as columns.
    k: [[f64; 3]; 3],
    shakhov: bool,
}

impl Linearized {
    pub fn new(grid: &VelocityGrid, gas: &GasModel, state: Gauss<f64>) -> Result<Self> {
        let fit = fit_maxwellian(grid, &state)?;
        let proj = Projector::new(grid, fit)?;
        let nu = gas.collision_frequency(state.rho, state.t / gas.r);
        let shakhov = gas.prandtl_mode == PrandtlMode::Shakhov;
        let mut k = [[0.0; 3]; 3];
        if shakhov {
            for j in 0..3 {
                let mut e = [0.0; 3];
                e[j] = 1.0;
                let s = proj.p1(grid, &shakhov_discrete(grid, gas, &fit, state.rho, e));
                let qs = heat_flux(grid, &s, state.w, state.t);
                for i in 0..3 {
                    k[i][j] = qs[i];
                }
            }
        }
        Ok(Self { fit, state, nu, proj, k, shakhov })
    }

    fn s_lin(&self, grid: &VelocityGrid, gas: &GasModel, q: [f64; 3]) -> Vec<f64> {
        self.proj.p1(grid, &shakhov_discrete(grid, gas, &self.fit, self.state.rho, q))
    }

    /// Largest ψ-moment of `h` relative to `scale`.
    pub fn micro_defect(&self, grid: &VelocityGrid, h: &[f64]) -> f64 {
        let b = poly_moments(&moments(grid, h), self.state.w);
        let t = self.state.t;
        let scale = [1.0, t.sqrt(), t.sqrt(), t.sqrt(), t];
        let mut abs_scale: f64 = 0.0;
        let n = grid.n_nodes();
        let _ = n;
        for (v, w) in h.iter().zip(grid_weights_iter(grid)) {
            abs_scale += (v * w).abs();
        }
        let abs_scale = abs_scale.max(f64::MIN_POSITIVE);
        b.iter().zip(scale).map(|(m, s)| m.abs() / (s * abs_scale)).fold(0.0, f64::max)
    }

    pub fn apply(&self, grid: &VelocityGrid, gas: &GasModel, h: &[f64]) -> Vec<f64> {
        let q = heat_flux(grid, h, self.state.w, self.state.t);
        let s = if self.shakhov { self.s_lin(grid, gas, q) } else { vec![0.0; h.len()] };
        h.iter().zip(&s).map(|(hv, sv)| self.nu * (sv - hv)).collect()
    }

    /// `L_M^{-1} h`; errors unless `h` is microscopic.
    pub fn inverse(&self, grid: &VelocityGrid, gas: &GasModel, h: &[f64]) -> Result<Vec<f64>> {
        let defect = self.micro_defect(grid, h);
        if defect > tolerances::MICROSCOPIC_TOL {
            return Err(Error::NotMicroscopic { max_moment: defect, tol: tolerances::MICROSCOPIC_TOL });
        }
        if !self.shakhov {
            return Ok(h.iter().map(|v| -v / self.nu).collect());
        }
        let qh = heat_flux(grid, h, self.state.w, self.state.t);
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = if i == j { 1.0 } else { 0.0 } - self.k[i][j];
            }
        }
        let qg = dense::solve(a, [-qh[0] / self.nu, -qh[1] / self.nu, -qh[2] / self.nu], tolerances::RCOND_MIN)
            .ok_or(Error::Singular("linearized inverse"))?;
        let s = self.s_lin(grid, gas, qg);
        Ok(h.iter().zip(&s).map(|(hv, sv)| sv - hv / self.nu).collect())
    }
}

fn grid_weights_iter(grid: &VelocityGrid) -> Vec<f64> {
    let n = grid.n_nodes();
    let w = &grid.weights;
    match grid.mode {
        VelocityMode::Reduced => (0..4 * n).map(|i| w[i % n]).collect(),
        VelocityMode::Full3d => {
            let mut out = Vec::with_capacity(n * n * n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out.push(w[i] * w[j] * w[k]);
                    }
                }
            }
            out
        }
    }
}

/// Entropy `∫ f ln f dξ`. Reduced mode uses the transverse Gaussian
/// closure, the minimum of `∫ f ln f` over all `f` with the given marginals.
pub fn entropy(grid: &VelocityGrid, f: &[f64]) -> f64 {
    let n = grid.n_nodes();
    let w = &grid.weights;
    match grid.mode {
        VelocityMode::Reduced => (0..n)
            .map(|k| {
                let (m0, m2, h2, h3) = (f[k], f[n + k], f[2 * n + k], f[3 * n + k]);
                if m0 <= 0.0 {
                    return 0.0;
                }
                let d = m2 * m0 - h2 * h2 - h3 * h3;
                w[k] * (3.0 * m0 * m0.ln() - m0 * (1.0 + std::f64::consts::PI.ln()) - m0 * d.ln())
            })
            .sum(),
        VelocityMode::Full3d => {
            let ww = grid_weights_iter(grid);
            f.iter().zip(&ww).map(|(v, w)| if *v > 0.0 { w * v * v.ln() } else { 0.0 }).sum()
        }
    }
}

/// `∫ (∂H/∂f) · df dξ`: the entropy rate for a rate of change `df`.
pub fn entropy_rate(grid: &VelocityGrid, f: &[f64], df: &[f64]) -> f64 {
    let n = grid.n_nodes();
    let w = &grid.weights;
    match grid.mode {
        VelocityMode::Reduced => (0..n)
            .map(|k| {
                let (m0, m2, h2, h3) = (f[k], f[n + k], f[2 * n + k], f[3 * n + k]);
                let d = m2 * m0 - h2 * h2 - h3 * h3;
                let g0 = 3.0 * m0.ln() + 2.0 - std::f64::consts::PI.ln() - d.ln() - m0 * m2 / d;
                let g2 = -m0 * m0 / d;
                let gh2 = 2.0 * m0 * h2 / d;
                let gh3 = 2.0 * m0 * h3 / d;
                w[k] * (g0 * df[k] + g2 * df[n + k] + gh2 * df[2 * n + k] + gh3 * df[3 * n + k])
            })
            .sum(),
        VelocityMode::Full3d => {
            let ww = grid_weights_iter(grid);
            (0..f.len()).map(|i| ww[i] * (f[i].ln() + 1.0) * df[i]).sum()
        }
    }
}

/// Entropy production `∫ Q ln f dξ` of the collision operator.
pub fn entropy_production(grid: &VelocityGrid, gas: &GasModel, f: &[f64], cell: usize) -> Result<f64> {
    let q = collision(grid, gas, f, cell)?;
    Ok(entropy_rate(grid, f, &q))
}

/// `∫ g² / M* dξ`.
///
/// Reduced mode lifts each marginal set `(m0, m2, h)` to the transverse
/// profile `[m0 + h·ξ⊥/T + C(|ξ⊥|²/(2T) - 1)] N⊥(ξ⊥; T)` about the local
/// variance `T = t_local`, `C = (m2 - 2T m0)/(2T)`, and integrates `ξ⊥`
/// analytically. This is exact for the polynomial-times-local-Maxwellian
/// functions produced by the solver; it needs `T < 2 T*`.
pub fn weighted_norm_sq(grid: &VelocityGrid, g: &[f64], star: &Gauss<f64>, t_local: f64) -> f64 {
    let n = grid.n_nodes();
    let (x, w) = (&grid.nodes, &grid.weights);
    let t = star.t;
    let inv = 1.0 / (SQRT_2PI * t.sqrt());
    match grid.mode {
        VelocityMode::Reduced => {
            let tl = t_local;
            let beta = 1.0 / tl - 0.5 / t;
            let s = 0.5 / beta;
            let kfac = t / (tl * tl) * s;
            let cc = 2.0 * s * s / (tl * tl) - 2.0 * s / tl + 1.0;
            let ac = 2.0 * (s / tl - 1.0);
            (0..n)
                .map(|k| {
                    let ms = star.rho * inv * (-0.5 * (x[k] - star.w[0]).powi(2) / t).exp();
                    let (m0, m2, h2, h3) = (g[k], g[n + k], g[2 * n + k], g[3 * n + k]);
                    let c = (m2 - 2.0 * tl * m0) / (2.0 * tl);
                    let b2 = (h2 * h2 + h3 * h3) / (tl * tl);
                    w[k] * kfac * (m0 * m0 + b2 * s + c * c * cc + m0 * c * ac) / ms
                })
                .sum()
        }
        VelocityMode::Full3d => {
            let gd: Vec<Vec<f64>> = (0..3)
                .map(|d| x.iter().map(|&v| inv * (-0.5 * (v - star.w[d]).powi(2) / t).exp()).collect())
                .collect();
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let ms = star.rho * gd[0][i] * gd[1][j] * gd[2][k];
                        let v = g[(i * n + j) * n + k];
                        s += w[i] * w[j] * w[k] * v * v / ms;
                    }
                }
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(mode: VelocityMode, n: usize) -> VelocityGrid {
        let gas = GasModel::default();
        VelocityGrid::for_range(mode, n, &gas, 1.6, 0.3, 7.5).unwrap()
    }

    fn perturbed(grid: &VelocityGrid, gas: &GasModel) -> Vec<f64> {
        let a = MacroState::new(1.2, [0.4, 0.3, -0.2], 1.1).gauss(gas, 0.3);
        let b = MacroState::new(0.15, [-1.0, 0.5, 0.4], 0.7).gauss(gas, 0.3);
        let ma = materialize(grid, &PolyM::maxwellian(a));
        let mb = materialize(grid, &PolyM::maxwellian(b));
        ma.iter().zip(&mb).map(|(x, y)| x + y).collect()
    }

    #[test]
    fn maxwellian_round_trip() {
        let gas = GasModel::default();
        for mode in [VelocityMode::Reduced, VelocityMode::Full3d] {
            let n = if mode == VelocityMode::Reduced { 64 } else { 24 };
            let gr = grid(mode, n);
            let s = MacroState::new(2.0, [0.3, 0.1, -0.2], 1.5);
            let m = maxwellian(&gr, &gas, 0.1, &s).unwrap();
            let b = macro_state(&gr, &gas, 0.1, &m, 0).unwrap();
            assert!((b.rho - 2.0).abs() < 1e-13);
            assert!((b.theta - 1.5).abs() < 1e-13);
            for i in 0..3 {
                assert!((b.u[i] - s.u[i]).abs() < 1e-11, "{mode:?} {}", b.u[i]);
            }
        }
    }

    #[test]
    fn collision_conserves_and_vanishes_on_maxwellian() {
        for gas in [GasModel::default(), GasModel::bgk()] {
            for mode in [VelocityMode::Reduced, VelocityMode::Full3d] {
                let n = if mode == VelocityMode::Reduced { 64 } else { 20 };
                let gr = grid(mode, n);
                let f = perturbed(&gr, &gas);
                let q = collision(&gr, &gas, &f, 0).unwrap();
                let c = moments(&gr, &q).as_array();
                let scale = moments(&gr, &f).as_array().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let nu = target(&gr, &gas, &f, 0).unwrap().nu;
                for v in c {
                    assert!(v.abs() < 1e-13 * nu * scale, "{mode:?} {v}");
                }
                let rate = entropy_rate(&gr, &f, &q);
                assert!(rate < 0.0, "{:?} {mode:?} {rate}", gas.prandtl_mode);
                let s = MacroState::new(1.0, [0.0; 3], 1.0);
                let m = maxwellian(&gr, &gas, 0.1, &s).unwrap();
                let qm = collision(&gr, &gas, &m, 0).unwrap();
                assert!(qm.iter().all(|v| v.abs() < 1e-14));
            }
        }
    }

    #[test]
    fn projector_algebra() {
        let gas = GasModel::default();
        let gr = grid(VelocityMode::Reduced, 64);
        let f = perturbed(&gr, &gas);
        let st = moment_gauss(&gr, &gas, &f, 0).unwrap();
        let fit = fit_maxwellian(&gr, &st).unwrap();
        let pr = Projector::new(&gr, fit).unwrap();
        let (p0, p1) = pr.project(&gr, &f);
        let p0p0 = pr.p0(&gr, &p0);
        let p0p1 = pr.p0(&gr, &p1);
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..f.len() {
            assert!((p0p0[k] - p0[k]).abs() < 1e-12 * scale);
            assert!(p0p1[k].abs() < 1e-12 * scale);
        }
        let m = poly_moments(&moments(&gr, &p1), fit.w);
        assert!(m.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn reduced_relax_matches_exponential() {
        let gas = GasModel::bgk();
        let gr = grid(VelocityMode::Reduced, 64);
        let f = perturbed(&gr, &gas);
        let tg = target(&gr, &gas, &f, 0).unwrap();
        let eps = 0.1;
        let tau = 0.002;
        let r = relax(&gr, &gas, eps, &f, tau, 0).unwrap();
        let l = tau * tg.nu / (eps * eps);
        for k in 0..f.len() {
            let want = tg.maxwellian[k] + (-l).exp() * (f[k] - tg.maxwellian[k]);
            assert!((r[k] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn linearized_inverse_round_trip() {
        for gas in [GasModel::default(), GasModel::bgk()] {
            let gr = grid(VelocityMode::Reduced, 64);
            let s = MacroState::new(1.1, [0.2, 0.0, 0.0], 1.2).gauss(&gas, 0.1);
            let lin = Linearized::new(&gr, &gas, s).unwrap();
            let raw = materialize(&gr, &PolyM { g: s, p: Poly::c(0).mul(&Poly::c_sq()).add(&Poly::c(0).mul_c(1)) });
            let h = Projector::new(&gr, lin.fit).unwrap().p1(&gr, &raw);
            let g = lin.inverse(&gr, &gas, &h).unwrap();
            let back = lin.apply(&gr, &gas, &g);
            let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for k in 0..h.len() {
                assert!((back[k] - h[k]).abs() < 1e-10 * scale);
            }
            assert!(matches!(lin.inverse(&gr, &gas, &raw), Err(Error::NotMicroscopic { .. })));
        }
    }

    #[test]
    fn reduced_weighted_norm_matches_full_quadrature() {
        let gas = GasModel::default();
        let local_state = MacroState::new(0.95, [0.0; 3], 1.05).gauss(&gas, 0.1);
        let star = MacroState::new(1.0, [0.0; 3], 0.9).gauss(&gas, 1.0);
        // Typical microscopic shapes: heat flux, shear and a bulk mix.
        let p = Poly::c(0)
            .mul(&Poly::c_sq())
            .scale(0.3)
            .add(&Poly::c(0).mul_c(1).scale(-0.2))
            .add(&Poly::c(0).mul(&Poly::c(0)).scale(0.1))
            .add(&Poly::c_sq().scale(-0.05));
        let pm = PolyM { g: local_state, p };
        let red = grid(VelocityMode::Reduced, 64);
        let full = VelocityGrid::for_range(VelocityMode::Full3d, 48, &gas, 1.6, 0.3, 7.5).unwrap();
        let a = weighted_norm_sq(&red, &materialize(&red, &pm), &star, local_state.t);
        let b = weighted_norm_sq(&full, &materialize(&full, &pm), &star, local_state.t);
        assert!(((a - b) / b).abs() < 1e-2, "{a} vs {b}");
    }
}
