//! Collision step kernels.
//!
//! [`ReducedKernel`] is a fused version of [`local::relax`] for reduced
//! cells whose transverse marginals `h2`, `h3` vanish. In that class the
//! fitted Maxwellian, the Shakhov correction and its `P0` part reduce to a
//! handful of weighted sums over the ξ1 nodes, precomputed as power tables.

use crate::error::{Error, Result};
use crate::kinetic_model::gas::{GasModel, PrandtlMode};
use crate::kinetic_model::local;
use crate::kinetic_model::velocity::{VelocityGrid, VelocityMode};
use crate::numerics::dense;
use crate::tolerances;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
/// Nodes per exact restart of the Gaussian recurrence.
const BLOCK: usize = 16;
/// A cell whose relaxation would change it by no more than this many ulps of
/// its largest value is left untouched: the change is pure round-off of the
/// Maxwellian refit, and skipping it makes discrete equilibria exact fixed
/// points.
pub const EQUILIBRIUM_ULPS: f64 = 16.0;

/// Per-cell outcome of a relaxation, used by the step monitors.
#[derive(Clone, Copy, Debug, Default)]
pub struct CellStats {
    pub min_value: f64,
    pub max_value: f64,
    /// False if any sign-constrained value is NaN or infinite.
    pub finite: bool,
}

impl CellStats {
    pub const EMPTY: Self = Self { min_value: f64::INFINITY, max_value: f64::NEG_INFINITY, finite: true };

    pub fn of(values: &[f64]) -> Self {
        values.iter().fold(Self::EMPTY, |s, v| Self {
            min_value: s.min_value.min(*v),
            max_value: s.max_value.max(*v),
            finite: s.finite && v.is_finite(),
        })
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            min_value: self.min_value.min(o.min_value),
            max_value: self.max_value.max(o.max_value),
            finite: self.finite && o.finite,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReducedKernel {
    n: usize,
    nodes: Vec<f64>,
    /// `wpow[j][k] = w_k ξ_k^j`, `j ≤ 5`.
    wpow: [Vec<f64>; 6],
    h: f64,
    gas: GasModel,
    pr: f64,
}

struct Fit {
    w: f64,
    t: f64,
    rho: f64,
    /// Raw sums `Σ w ξ^j g` of the normalized Gaussian, `j ≤ 5`.
    s: [f64; 6],
}

impl ReducedKernel {
    pub fn new(grid: &VelocityGrid, gas: &GasModel) -> Result<Self> {
        if grid.mode != VelocityMode::Reduced {
            return Err(Error::Config("reduced kernel needs a reduced velocity grid".into()));
        }
        let n = grid.n_nodes();
        let wpow = std::array::from_fn(|j| {
            grid.nodes.iter().zip(&grid.weights).map(|(x, w)| w * x.powi(j as i32)).collect()
        });
        Ok(Self { n, nodes: grid.nodes.clone(), wpow, h: grid.spacing(), gas: *gas, pr: gas.prandtl() })
    }

    /// Normalized Gaussian `N(ξ; w, t)` at the nodes: a two-term
    /// multiplicative recurrence restarted from `exp` every [`BLOCK`] nodes.
    fn gaussian(&self, w: f64, t: f64, out: &mut [f64]) {
        let inv = 1.0 / (SQRT_2PI * t.sqrt());
        let h = self.h;
        let q = (-h * h / t).exp();
        for b in (0..self.n).step_by(BLOCK) {
            let c = self.nodes[b] - w;
            let mut g = inv * (-0.5 * c * c / t).exp();
            let mut r = (-(c * h + 0.5 * h * h) / t).exp();
            for o in &mut out[b..(b + BLOCK).min(self.n)] {
                *o = g;
                g *= r;
                r *= q;
            }
        }
    }

    /// `Σ w ξ^j g` for `j < J` in one pass over the nodes. Each sum still
    /// accumulates in node order.
    fn sums<const J: usize>(&self, g: &[f64]) -> [f64; J] {
        let mut s = [0.0; J];
        for (k, v) in g.iter().enumerate().take(self.n) {
            for (j, acc) in s.iter_mut().enumerate() {
                *acc += self.wpow[j][k] * v;
            }
        }
        s
    }

    /// Same Newton iteration as [`local::fit_maxwellian`] in reduced mode.
    fn fit(&self, rho: f64, w: f64, t: f64, g: &mut [f64]) -> Result<Fit> {
        let rhs2 = 3.0 * t + w * w;
        let (mut wf, mut tf) = (w, t);
        for _ in 0..30 {
            self.gaussian(wf, tf, g);
            let s: [f64; 6] = self.sums(g);
            let (r, j) = local::ratio_jacobian(&[s[0], s[1], s[2], s[3], s[4]], wf, tf);
            let f = [r[0] - w, r[1] + 2.0 * tf - rhs2];
            if f[0].abs() <= tolerances::MAXWELLIAN_FIT_TOL * t.sqrt() && f[1].abs() <= tolerances::MAXWELLIAN_FIT_TOL * t {
                return Ok(Fit { w: wf, t: tf, rho: rho / s[0], s });
            }
            let jac = [[j[0][0], j[0][1]], [j[1][0], j[1][1] + 2.0]];
            let d = dense::solve(jac, [-f[0], -f[1]], tolerances::RCOND_MIN).ok_or(Error::Singular("Maxwellian fit"))?;
            wf += d[0];
            tf += d[1];
            if !(tf > 0.0) {
                break;
            }
        }
        Err(Error::NoConvergence { what: "Maxwellian fit", iterations: 30, residual: f64::NAN })
    }

    /// Relaxes `cell = [m0 | m2 | ..]` in place over `tau` at scale `eps`.
    /// Only the `m0`, `m2` blocks are read or written; `scratch` holds at
    /// least `3n` values.
    pub fn relax(&self, cell: &mut [f64], eps: f64, tau: f64, index: usize, scratch: &mut [f64]) -> Result<CellStats> {
        let n = self.n;
        let (m0, rest) = cell.split_at_mut(n);
        let m2 = &mut rest[..n];
        let a: [f64; 4] = self.sums(m0);
        let b: [f64; 2] = self.sums(m2);
        let rho = a[0];
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::DegenerateState { cell: index, rho, theta: f64::NAN });
        }
        let w = a[1] / rho;
        let t = ((a[2] + b[0]) / rho - w * w) / 3.0;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::DegenerateState { cell: index, rho, theta: t / self.gas.r });
        }
        let (g, rest) = scratch.split_at_mut(n);
        let g = &mut g[..];
        let fit = self.fit(rho, w, t, g)?;
        let nu = self.gas.collision_frequency(rho, t / self.gas.r);
        let lam = tau * nu / (eps * eps);
        let e1 = (-lam).exp();
        let (wf, tf, rf) = (fit.w, fit.t, fit.rho);

        // Shakhov correction `A q1 c1 (|c|²/T - 5) M` and its P0 part, as
        // coefficients of the reduced marginals
        // m0: (A q1 c (c²/T - 3) - α0 - α1 c - α4 (c² + 2T)) G
        // m2: (A q1 c (2c² - 2T) - 2T (α0 + α1 c) - α4 (2T c² + 8T²)) G
        let (mut aq, mut al) = (0.0, [0.0; 3]);
        let mut cs = 0.0;
        if self.gas.prandtl_mode == PrandtlMode::Shakhov {
            let q1 = 0.5 * (a[3] - 3.0 * w * a[2] + 3.0 * w * w * a[1] - w * w * w * a[0] + b[1] - w * b[0]);
            aq = (1.0 - self.pr) / (5.0 * rho * tf * tf) * q1;
            // Central sums of G = ρ' N about the fitted mean.
            let sig = central(&fit.s, wf, rf);
            let g2 = sig[2] + 2.0 * tf * sig[0];
            let g3 = sig[3] + 2.0 * tf * sig[1];
            let gram = [
                [sig[0], sig[1], g2],
                [sig[1], sig[2], g3],
                [g2, g3, sig[4] + 4.0 * tf * sig[2] + 8.0 * tf * tf * sig[0]],
            ];
            let rhs = [
                aq * (sig[3] / tf - 3.0 * sig[1]),
                aq * (sig[4] / tf - 3.0 * sig[2]),
                aq * (sig[5] / tf - sig[3] - 2.0 * tf * sig[1]),
            ];
            al = dense::solve(gram, rhs, tolerances::RCOND_MIN)
                .ok_or_else(|| Error::Resolution("ill-conditioned projection Gram matrix".into()))?;
            cs = local::shakhov_weight(self.pr, lam);
        }

        let (new0, new2) = rest[..2 * n].split_at_mut(n);
        let (mut dev, mut scale) = (0.0f64, 0.0f64);
        for k in 0..n {
            let gk = rf * g[k];
            let c = self.nodes[k] - wf;
            let c2 = c * c;
            let p = al[0] + al[1] * c;
            let s0 = aq * c * (c2 / tf - 3.0) - p - al[2] * (c2 + 2.0 * tf);
            let s2 = aq * c * (2.0 * c2 - 2.0 * tf) - 2.0 * tf * p - al[2] * (2.0 * tf * c2 + 8.0 * tf * tf);
            let (mm0, mm2) = (gk, 2.0 * tf * gk);
            new0[k] = mm0 + e1 * (m0[k] - mm0) + cs * s0 * gk;
            new2[k] = mm2 + e1 * (m2[k] - mm2) + cs * s2 * gk;
            dev = dev.max((new0[k] - m0[k]).abs()).max((new2[k] - m2[k]).abs());
            scale = scale.max(m0[k].abs()).max(m2[k].abs());
        }
        if dev > EQUILIBRIUM_ULPS * f64::EPSILON * scale || !dev.is_finite() {
            m0.copy_from_slice(new0);
            m2.copy_from_slice(new2);
        }
        let mut stats = CellStats::of(m0).merge(CellStats::of(m2));
        stats.finite &= rho.is_finite();
        Ok(stats)
    }
}

/// `σ_j = Σ w (ξ - m)^j ρ N` from raw sums by binomial expansion.
fn central(s: &[f64; 6], m: f64, rho: f64) -> [f64; 6] {
    const BINOM: [[f64; 6]; 6] = [
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0, 0.0],
        [1.0, 5.0, 10.0, 10.0, 5.0, 1.0],
    ];
    let mut out = [0.0; 6];
    for j in 0..6 {
        let mut acc = 0.0;
        let mut p = 1.0;
        // Σ_i C(j, i) s_i (-m)^(j-i), accumulated from i = j down.
        for i in (0..=j).rev() {
            acc += BINOM[j][i] * s[i] * p;
            p *= -m;
        }
        out[j] = rho * acc;
    }
    out
}

/// Generic per-cell relaxation for any layout.
pub fn relax_generic(grid: &VelocityGrid, gas: &GasModel, cell: &mut [f64], eps: f64, tau: f64, index: usize) -> Result<CellStats> {
    let out = local::relax(grid, gas, eps, cell, tau, index)?;
    let dev = out.iter().zip(cell.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = cell.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if dev > EQUILIBRIUM_ULPS * f64::EPSILON * scale || !dev.is_finite() {
        cell.copy_from_slice(&out);
    }
    let n = grid.n_nodes();
    let signed = if grid.mode == VelocityMode::Reduced { &cell[..2 * n] } else { &cell[..] };
    Ok(CellStats::of(signed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> VelocityGrid {
        VelocityGrid::new(VelocityMode::Reduced, 64, 7.5 * (2.0f64 / 3.0 * 1.2).sqrt() + 0.05).unwrap()
    }

    /// Non-equilibrium reduced cell with vanishing transverse marginals.
    fn cell(grid: &VelocityGrid, skew: f64) -> Vec<f64> {
        let n = grid.n_nodes();
        let mut f = vec![0.0; 4 * n];
        let (t, w) = (0.8, 0.03);
        for (k, &x) in grid.nodes.iter().enumerate() {
            let c = x - w;
            let g = 1.1 * (-0.5 * c * c / t).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
            let bump = 1.0 + skew * c * (c * c / t - 3.0) + 0.05 * (c * c / t - 1.0);
            f[k] = g * bump;
            f[n + k] = 2.0 * t * g * (1.0 + skew * c);
        }
        f
    }

    #[test]
    fn recurrence_matches_direct_gaussian() {
        let g = grid();
        let k = ReducedKernel::new(&g, &GasModel::default()).unwrap();
        let mut out = vec![0.0; 64];
        k.gaussian(0.02, 0.7, &mut out);
        for (o, x) in out.iter().zip(&g.nodes) {
            let exact = (-0.5 * (x - 0.02).powi(2) / 0.7).exp() / (SQRT_2PI * 0.7f64.sqrt());
            // Rounding grows linearly in r, so quadratically in g, per block.
            let tol = (BLOCK * BLOCK) as f64 * f64::EPSILON;
            assert!((o - exact).abs() <= tol * exact, "{o} vs {exact}");
        }
    }

    #[test]
    fn fused_kernel_matches_generic_relaxation() {
        let g = grid();
        for gas in [GasModel::default(), GasModel::bgk()] {
            let k = ReducedKernel::new(&g, &gas).unwrap();
            let mut scratch = vec![0.0; 3 * 64];
            for &(skew, tau) in &[(0.0, 1e-4), (0.02, 3e-4), (-0.04, 1e-2)] {
                let f = cell(&g, skew);
                let mut fast = f.clone();
                let mut slow = f.clone();
                k.relax(&mut fast, 0.1, tau, 0, &mut scratch).unwrap();
                relax_generic(&g, &gas, &mut slow, 0.1, tau, 0).unwrap();
                let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let err = fast.iter().zip(&slow).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(err <= 1e-13 * scale, "{:?} skew {skew}: {err:e}", gas.prandtl_mode);
                assert!(fast[128..].iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn fused_kernel_conserves_invariants() {
        let g = grid();
        let gas = GasModel::default();
        let k = ReducedKernel::new(&g, &gas).unwrap();
        let mut f = cell(&g, 0.03);
        let before = local::moments(&g, &f);
        k.relax(&mut f, 0.05, 1e-3, 0, &mut vec![0.0; 3 * 64]).unwrap();
        let after = local::moments(&g, &f);
        assert!((before.mass - after.mass).abs() <= 1e-14 * before.mass);
        assert!((before.momentum[0] - after.momentum[0]).abs() <= 1e-14 * before.mass);
        assert!((before.energy - after.energy).abs() <= 1e-14 * before.energy);
    }
}
