//! Macroscopic states and conserved moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_model::gas::GasModel;
use crate::kinetic_model::poly::Gauss;

/// `(ρ, u, θ)` with `u` the scaled bulk velocity (physical velocity `εu`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub rho: f64,
    pub u: [f64; 3],
    pub theta: f64,
}

/// `(∫f, ∫ξf, ∫|ξ|²f/2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
}

impl Conserved {
    pub fn as_array(&self) -> [f64; 5] {
        [self.mass, self.momentum[0], self.momentum[1], self.momentum[2], self.energy]
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            mass: self.mass + o.mass,
            momentum: [
                self.momentum[0] + o.momentum[0],
                self.momentum[1] + o.momentum[1],
                self.momentum[2] + o.momentum[2],
            ],
            energy: self.energy + o.energy,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mass: self.mass * s,
            momentum: [self.momentum[0] * s, self.momentum[1] * s, self.momentum[2] * s],
            energy: self.energy * s,
        }
    }
}

impl MacroState {
    pub fn new(rho: f64, u: [f64; 3], theta: f64) -> Self {
        Self { rho, u, theta }
    }

    pub fn at_rest(rho: f64, theta: f64) -> Self {
        Self { rho, u: [0.0; 3], theta }
    }

    pub fn v(&self) -> f64 {
        1.0 / self.rho
    }

    pub fn pressure(&self, gas: &GasModel) -> f64 {
        gas.r * self.rho * self.theta
    }

    pub fn internal_energy(&self, gas: &GasModel) -> f64 {
        1.5 * gas.r * self.theta
    }

    pub fn is_valid(&self) -> bool {
        self.rho > 0.0 && self.theta > 0.0 && self.rho.is_finite() && self.theta.is_finite()
    }

    /// Gaussian parameters of `M[ρ, εu, θ]`.
    pub fn gauss(&self, gas: &GasModel, eps: f64) -> Gauss<f64> {
        Gauss {
            rho: self.rho,
            w: [eps * self.u[0], eps * self.u[1], eps * self.u[2]],
            t: gas.r * self.theta,
        }
    }

    pub fn conserved(&self, gas: &GasModel, eps: f64) -> Conserved {
        let w = [eps * self.u[0], eps * self.u[1], eps * self.u[2]];
        let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        Conserved {
            mass: self.rho,
            momentum: [self.rho * w[0], self.rho * w[1], self.rho * w[2]],
            energy: self.rho * (self.internal_energy(gas) + 0.5 * w2),
        }
    }

    /// Inverts [`MacroState::conserved`]; `cell` labels errors.
    pub fn from_conserved(c: &Conserved, gas: &GasModel, eps: f64, cell: usize) -> Result<Self> {
        let rho = c.mass;
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::DegenerateState { cell, rho, theta: f64::NAN });
        }
        let w = [c.momentum[0] / rho, c.momentum[1] / rho, c.momentum[2] / rho];
        let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        let theta = (2.0 * c.energy / rho - w2) / (3.0 * gas.r);
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::DegenerateState { cell, rho, theta });
        }
        let u = if eps > 0.0 { [w[0] / eps, w[1] / eps, w[2] / eps] } else { [0.0; 3] };
        Ok(Self { rho, u, theta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_gas_identities() {
        let gas = GasModel::default();
        let s = MacroState::new(1.7, [0.1, 0.0, 0.0], 1.2);
        assert!((s.internal_energy(&gas) - s.theta).abs() < 1e-15);
        assert!((s.pressure(&gas) - 2.0 / 3.0 * s.rho * s.theta).abs() < 1e-15);
    }

    #[test]
    fn conserved_round_trip() {
        let gas = GasModel::default();
        let s = MacroState::new(2.0, [0.3, -0.1, 0.2], 1.5);
        let c = s.conserved(&gas, 0.1);
        let b = MacroState::from_conserved(&c, &gas, 0.1, 0).unwrap();
        assert!((b.rho - 2.0).abs() < 1e-15);
        assert!((b.theta - 1.5).abs() < 1e-14);
        for i in 0..3 {
            assert!((b.u[i] - s.u[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn degenerate_reports_cell() {
        let gas = GasModel::default();
        let c = Conserved { mass: 1.0, momentum: [0.0; 3], energy: -1.0 };
        match MacroState::from_conserved(&c, &gas, 0.1, 17) {
            Err(Error::DegenerateState { cell, .. }) => assert_eq!(cell, 17),
            other => panic!("{other:?}"),
        }
    }
}
