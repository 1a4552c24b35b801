//! Phase-space fields on a uniform x-grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::gas::GasModel;
use crate::kinetic_model::local;
use crate::kinetic_model::macrostate::{Conserved, MacroState};
use crate::kinetic_model::poly::PolyM;
use crate::kinetic_model::velocity::VelocityGrid;
use crate::tolerances;

/// Uniform cell-centred grid: `x_j = x0 + (j + ½) dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XGrid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl XGrid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Self {
        Self { x0, dx, n }
    }

    /// Grid covering `[-half, half]` with spacing at most `dx_max`.
    pub fn symmetric(half: f64, dx_max: f64) -> Self {
        let n = ((2.0 * half / dx_max).ceil() as usize).max(1);
        let dx = 2.0 * half / n as f64;
        Self { x0: -half, dx, n }
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + (j as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn length(&self) -> f64 {
        self.dx * self.n as f64
    }
}

/// `f(x, ξ)` stored cell-major; each cell holds one local function.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionField {
    pub xgrid: XGrid,
    pub vgrid: VelocityGrid,
    pub eps: f64,
    pub data: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(xgrid: XGrid, vgrid: VelocityGrid, eps: f64) -> Self {
        let data = vec![0.0; xgrid.n * vgrid.local_len()];
        Self { xgrid, vgrid, eps, data }
    }

    /// Field whose cell `j` is the discrete Maxwellian of `states[j]`.
    pub fn from_states(xgrid: XGrid, vgrid: VelocityGrid, eps: f64, gas: &GasModel, states: &[MacroState]) -> Result<Self> {
        if states.len() != xgrid.n {
            return Err(Error::GridMismatch(format!("{} states for {} cells", states.len(), xgrid.n)));
        }
        let mut f = Self::zeros(xgrid, vgrid, eps);
        for (j, s) in states.iter().enumerate() {
            let m = local::maxwellian(&f.vgrid, gas, eps, s).map_err(|e| match e {
                Error::DegenerateState { rho, theta, .. } => Error::DegenerateState { cell: j, rho, theta },
                other => other,
            })?;
            f.cell_mut(j).copy_from_slice(&m);
        }
        Ok(f)
    }

    pub fn local_len(&self) -> usize {
        self.vgrid.local_len()
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        let l = self.local_len();
        &self.data[j * l..(j + 1) * l]
    }

    pub fn cell_mut(&mut self, j: usize) -> &mut [f64] {
        let l = self.local_len();
        &mut self.data[j * l..(j + 1) * l]
    }

    pub fn macro_states(&self, gas: &GasModel) -> Result<Vec<MacroState>> {
        (0..self.xgrid.n).map(|j| local::macro_state(&self.vgrid, gas, self.eps, self.cell(j), j)).collect()
    }

    /// `Σ_j dx ∫ψ f dξ`.
    pub fn total_moments(&self) -> Conserved {
        let mut c = Conserved::default();
        for j in 0..self.xgrid.n {
            c = c.add(&local::moments(&self.vgrid, self.cell(j)));
        }
        c.scale(self.xgrid.dx)
    }

    pub fn entropy(&self) -> f64 {
        (0..self.xgrid.n).map(|j| local::entropy(&self.vgrid, self.cell(j))).sum::<f64>() * self.xgrid.dx
    }

    /// Checks the sign constraints on `m0` (and `m2` in reduced mode).
    pub fn check_nonnegative(&self, tol_rel: f64) -> Result<()> {
        let max = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = -tol_rel * max;
        let n = self.vgrid.n_nodes();
        let reduced = self.vgrid.mode == crate::kinetic_model::velocity::VelocityMode::Reduced;
        for j in 0..self.xgrid.n {
            let c = self.cell(j);
            let signed = if reduced { &c[..2 * n] } else { c };
            if let Some((k, v)) = signed.iter().enumerate().find(|(_, v)| **v < floor || !v.is_finite()) {
                return Err(Error::Solver {
                    step: 0,
                    reason: format!("negative or non-finite value {v:e} at cell {j}, node {k}"),
                    dump: None,
                });
            }
        }
        let mass = self.total_moments().mass;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Solver { step: 0, reason: format!("total mass {mass:e}"), dump: None });
        }
        Ok(())
    }
}

/// `f = M + εG` cell by cell, optionally against a reference `Ḡ`.
#[derive(Clone, Debug)]
pub struct MicroDecomposition {
    pub m: Vec<f64>,
    pub g: Vec<f64>,
    pub gbar: Option<Vec<f64>>,
    pub gtilde: Option<Vec<f64>>,
}

impl MicroDecomposition {
    pub fn new(f: &DistributionField, gas: &GasModel) -> Result<Self> {
        let l = f.local_len();
        let mut m = vec![0.0; f.data.len()];
        let mut g = vec![0.0; f.data.len()];
        for j in 0..f.xgrid.n {
            let fj = f.cell(j);
            let st = local::moment_gauss(&f.vgrid, gas, fj, j)?;
            let fit = local::fit_maxwellian(&f.vgrid, &st)?;
            let mj = &mut m[j * l..(j + 1) * l];
            local::materialize_into(&f.vgrid, &PolyM::maxwellian(fit), mj);
            for k in 0..l {
                g[j * l + k] = (fj[k] - mj[k]) / f.eps;
            }
        }
        Ok(Self { m, g, gbar: None, gtilde: None })
    }

    pub fn with_reference(mut self, gbar: Vec<f64>) -> Result<Self> {
        if gbar.len() != self.g.len() {
            return Err(Error::GridMismatch("reference microscopic part has the wrong length".into()));
        }
        self.gtilde = Some(self.g.iter().zip(&gbar).map(|(a, b)| a - b).collect());
        self.gbar = Some(gbar);
        Ok(self)
    }

    /// Largest relative ψ-moment of `G` over all cells.
    pub fn micro_defect(&self, f: &DistributionField) -> f64 {
        let l = f.local_len();
        let mut worst: f64 = 0.0;
        for j in 0..f.xgrid.n {
            let gj = &self.g[j * l..(j + 1) * l];
            let mm = local::moments(&f.vgrid, &self.m[j * l..(j + 1) * l]).as_array();
            let gm = local::moments(&f.vgrid, gj).as_array();
            let scale = mm.iter().fold(0.0f64, |a, v| a.max(v.abs())) / f.eps;
            for v in gm {
                worst = worst.max(v.abs() / scale);
            }
        }
        worst
    }
}

/// Tolerance used by [`DistributionField::check_nonnegative`] by default.
pub const DEFAULT_NEG_TOL: f64 = tolerances::NEG_TOL_REL;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic_model::velocity::VelocityMode;

    #[test]
    fn decomposition_reconstructs_input() {
        let gas = GasModel::default();
        let vg = VelocityGrid::for_range(VelocityMode::Reduced, 48, &gas, 1.2, 0.1, 7.5).unwrap();
        let xg = XGrid::symmetric(1.0, 0.25);
        let states: Vec<_> = xg.centers().iter().map(|x| MacroState::new(1.0 + 0.1 * x, [0.5 * x, 0.0, 0.0], 1.0 - 0.05 * x)).collect();
        let mut f = DistributionField::from_states(xg, vg, 0.1, &gas, &states).unwrap();
        for (k, v) in f.data.iter_mut().enumerate() {
            *v *= 1.0 + 1e-3 * ((k % 7) as f64 - 3.0);
        }
        let d = MicroDecomposition::new(&f, &gas).unwrap();
        for k in 0..f.data.len() {
            assert!((d.m[k] + f.eps * d.g[k] - f.data[k]).abs() < 1e-15);
        }
        assert!(d.micro_defect(&f) < 1e-12);
        f.check_nonnegative(DEFAULT_NEG_TOL).unwrap();
    }
}
