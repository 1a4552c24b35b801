//! Discrete velocity grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::gas::GasModel;
use crate::numerics::gauss_moment;
use crate::tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityMode {
    /// Four ξ1-marginals `m0, m2, h2, h3` per cell.
    Reduced,
    /// Full tensor grid in `(ξ1, ξ2, ξ3)`.
    Full3d,
}

/// Uniform symmetric nodes on `[-V, V]` with trapezoid weights.
///
/// In full3d mode the same one-dimensional rule is used in each direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    pub mode: VelocityMode,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub cutoff: f64,
}

impl VelocityGrid {
    pub fn new(mode: VelocityMode, n_nodes: usize, cutoff: f64) -> Result<Self> {
        if n_nodes < 4 {
            return Err(Error::Config(format!("need at least 4 velocity nodes, got {n_nodes}")));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::Config(format!("velocity cutoff must be positive, got {cutoff}")));
        }
        let h = 2.0 * cutoff / (n_nodes - 1) as f64;
        let nodes: Vec<f64> = (0..n_nodes)
            .map(|k| {
                // Mirror the upper half so the set is exactly symmetric.
                let j = n_nodes - 1 - k;
                if k < j {
                    -cutoff + h * k as f64
                } else {
                    cutoff - h * j as f64
                }
            })
            .collect();
        let mut weights = vec![h; n_nodes];
        weights[0] = 0.5 * h;
        weights[n_nodes - 1] = 0.5 * h;
        Ok(Self { mode, nodes, weights, cutoff })
    }

    /// Grid whose cutoff is `factor · sqrt(R θ_max) + w_max`.
    ///
    /// Factors below 6 are rejected.
    pub fn for_range(
        mode: VelocityMode,
        n_nodes: usize,
        gas: &GasModel,
        theta_max: f64,
        w_max: f64,
        factor: f64,
    ) -> Result<Self> {
        if factor < tolerances::MIN_CUTOFF_FACTOR {
            return Err(Error::Config(format!(
                "cutoff factor {factor} below the minimum {}",
                tolerances::MIN_CUTOFF_FACTOR
            )));
        }
        Self::new(mode, n_nodes, factor * (gas.r * theta_max).sqrt() + w_max.abs())
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Number of stored values per spatial cell.
    pub fn local_len(&self) -> usize {
        let n = self.n_nodes();
        match self.mode {
            VelocityMode::Reduced => 4 * n,
            VelocityMode::Full3d => n * n * n,
        }
    }

    pub fn with_mode(&self, mode: VelocityMode) -> Self {
        Self { mode, ..self.clone() }
    }

    /// Errors unless `V ≥ 6 sqrt(R θ_max) + w_max`.
    pub fn check_resolution(&self, gas: &GasModel, theta_max: f64, w_max: f64) -> Result<()> {
        let need = tolerances::MIN_CUTOFF_FACTOR * (gas.r * theta_max).sqrt() + w_max.abs();
        if self.cutoff < need {
            return Err(Error::Resolution(format!(
                "cutoff V = {:.4} below 6·sqrt(Rθ) + |εu| = {need:.4} (θ = {theta_max}, |εu| = {w_max})",
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Largest relative error of `∫ξ1^k exp(-ξ1²/(2Rθ)) dξ1`, `k ≤ 6`, over
    /// the given temperatures. Odd moments are scaled by the neighbouring even
    /// normalization.
    pub fn moment_error(&self, gas: &GasModel, thetas: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &th in thetas {
            let t = gas.r * th;
            let norm = (2.0 * std::f64::consts::PI * t).sqrt();
            for k in 0..=6 {
                let num: f64 = self
                    .nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(x, w)| w * x.powi(k as i32) * (-x * x / (2.0 * t)).exp())
                    .sum();
                let scale = norm * t.powf(k as f64 / 2.0) * gauss_moment(k + k % 2);
                let exact = norm * t.powf(k as f64 / 2.0) * gauss_moment(k);
                worst = worst.max((num - exact).abs() / scale);
            }
        }
        worst
    }

    /// The stored quadrature self-test.
    pub fn self_test(&self, gas: &GasModel, theta_min: f64, theta_max: f64) -> Result<()> {
        let mid = 0.5 * (theta_min + theta_max);
        let err = self.moment_error(gas, &[theta_min, mid, theta_max]);
        if err > tolerances::QUADRATURE_SELF_TEST {
            return Err(Error::Resolution(format!(
                "Gaussian moment self-test failed: relative error {err:e} > {:e}",
                tolerances::QUADRATURE_SELF_TEST
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_positive_weights() {
        let g = VelocityGrid::new(VelocityMode::Reduced, 64, 6.4).unwrap();
        for k in 0..64 {
            assert_eq!(g.nodes[k], -g.nodes[63 - k]);
            assert_eq!(g.weights[k], g.weights[63 - k]);
            assert!(g.weights[k] > 0.0);
        }
    }

    #[test]
    fn default_cutoff_passes_self_test() {
        let gas = GasModel::default();
        let g = VelocityGrid::for_range(VelocityMode::Reduced, 64, &gas, 1.1, 0.0, 7.5).unwrap();
        g.self_test(&gas, 1.0, 1.1).unwrap();
    }

    #[test]
    fn factor_six_fails_sixth_moment() {
        let gas = GasModel::default();
        let g = VelocityGrid::new(VelocityMode::Reduced, 64, 6.0 * (gas.r * 1.1f64).sqrt()).unwrap();
        assert!(g.self_test(&gas, 1.0, 1.1).is_err());
    }

    #[test]
    fn resolution_error_for_hot_states() {
        let gas = GasModel::default();
        let g = VelocityGrid::for_range(VelocityMode::Reduced, 64, &gas, 1.0, 0.0, 7.5).unwrap();
        assert!(g.check_resolution(&gas, 1.0, 0.0).is_ok());
        assert!(matches!(g.check_resolution(&gas, 3.0, 0.0), Err(Error::Resolution(_))));
    }
}
