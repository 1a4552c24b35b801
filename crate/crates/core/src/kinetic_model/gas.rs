//! Gas model: relaxation-type collision surrogate and its transport
//! coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrandtlMode {
    /// Single relaxation time, Prandtl number 1.
    Bgk,
    /// Shakhov heat-flux correction, Prandtl number 2/3.
    Shakhov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasModel {
    #[serde(rename = "R")]
    pub r: f64,
    pub nu0: f64,
    pub omega: f64,
    pub prandtl_mode: PrandtlMode,
}

impl Default for GasModel {
    fn default() -> Self {
        Self { r: 2.0 / 3.0, nu0: 1.0, omega: 0.5, prandtl_mode: PrandtlMode::Shakhov }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportCoeffs {
    pub mu: f64,
    pub kappa: f64,
    pub a: f64,
}

/// `c · θ^p`, with derivatives in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub c: f64,
    pub p: f64,
}

impl PowerLaw {
    pub fn constant(c: f64) -> Self {
        Self { c, p: 0.0 }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.c * theta.powf(self.p)
    }

    /// `[f, f', ..., f^(n-1)]` at `theta`.
    pub fn derivs(&self, theta: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut coef = self.c;
        for k in 0..n {
            out.push(if coef == 0.0 { 0.0 } else { coef * theta.powf(self.p - k as f64) });
            coef *= self.p - k as f64;
        }
        out
    }
}

impl GasModel {
    pub fn bgk() -> Self {
        Self { prandtl_mode: PrandtlMode::Bgk, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Config(format!("gas constant R must be positive, got {}", self.r)));
        }
        if !(self.nu0 > 0.0 && self.nu0.is_finite()) {
            return Err(Error::Config(format!("nu0 must be positive, got {}", self.nu0)));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::Config(format!("omega must lie in [0, 1], got {}", self.omega)));
        }
        Ok(())
    }

    pub fn prandtl(&self) -> f64 {
        match self.prandtl_mode {
            PrandtlMode::Bgk => 1.0,
            PrandtlMode::Shakhov => 2.0 / 3.0,
        }
    }

    /// `κ / (R μ)`: 5/2 for BGK, 15/4 for Shakhov.
    pub fn kappa_factor(&self) -> f64 {
        2.5 / self.prandtl()
    }

    /// Relaxation frequency `ν̃ = ν0 ρ θ^(1-ω)`.
    #[inline]
    pub fn collision_frequency(&self, rho: f64, theta: f64) -> f64 {
        self.nu0 * rho * theta.powf(1.0 - self.omega)
    }

    pub fn mu_law(&self) -> PowerLaw {
        PowerLaw { c: self.r / self.nu0, p: self.omega }
    }

    pub fn kappa_law(&self) -> PowerLaw {
        PowerLaw { c: self.kappa_factor() * self.r * self.r / self.nu0, p: self.omega }
    }

    /// `a(θ) = 3κ(θ) / (5θ)`.
    pub fn a_law(&self) -> PowerLaw {
        PowerLaw { c: 0.6 * self.kappa_factor() * self.r * self.r / self.nu0, p: self.omega - 1.0 }
    }

    /// `μ(θ) / θ`, the transverse-velocity diffusivity.
    pub fn mu_over_theta_law(&self) -> PowerLaw {
        PowerLaw { c: self.r / self.nu0, p: self.omega - 1.0 }
    }

    pub fn mu(&self, theta: f64) -> f64 {
        self.mu_law().value(theta)
    }

    pub fn kappa(&self, theta: f64) -> f64 {
        self.kappa_law().value(theta)
    }

    pub fn a(&self, theta: f64) -> f64 {
        self.a_law().value(theta)
    }

    pub fn transport_coeffs(&self, theta: f64) -> TransportCoeffs {
        TransportCoeffs { mu: self.mu(theta), kappa: self.kappa(theta), a: self.a(theta) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shakhov_unit_temperature() {
        let g = GasModel::default();
        let c = g.transport_coeffs(1.0);
        assert!((c.mu - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.kappa - 5.0 / 3.0).abs() < 1e-15);
        assert!((c.a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shakhov_kappa_relation_holds_identically() {
        let g = GasModel::default();
        for &th in &[0.3, 1.0, 1.7, 4.0] {
            let c = g.transport_coeffs(th);
            assert!((c.kappa - 3.75 * g.r * c.mu).abs() < 1e-14 * c.kappa);
            assert!((c.kappa - 2.5 * c.mu).abs() < 1e-14 * c.kappa);
            assert!((c.a - 1.5 * c.mu / th).abs() < 1e-14 * c.a);
        }
    }

    #[test]
    fn bgk_kappa_is_five_halves_r_mu() {
        let g = GasModel::bgk();
        let c = g.transport_coeffs(1.3);
        assert!((c.kappa - 2.5 * g.r * c.mu).abs() < 1e-14);
    }

    #[test]
    fn power_law_derivatives() {
        let p = PowerLaw { c: 2.0, p: -0.5 };
        let d = p.derivs(1.5, 4);
        assert!((d[0] - 2.0 * 1.5f64.powf(-0.5)).abs() < 1e-15);
        assert!((d[1] + 1.5f64.powf(-1.5)).abs() < 1e-15);
        assert!((d[2] - 1.5 * 1.5f64.powf(-2.5)).abs() < 1e-14);
        assert!((d[3] + 3.75 * 1.5f64.powf(-3.5)).abs() < 1e-14);
        assert_eq!(PowerLaw::constant(3.0).derivs(2.0, 3), vec![3.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut g = GasModel::default();
        g.omega = 1.5;
        assert!(g.validate().is_err());
        g.omega = 0.5;
        g.r = 0.0;
        assert!(g.validate().is_err());
    }
}
