//! Leading microscopic parts built from macroscopic fields and gradients.

use crate::kinetic_model::gas::GasModel;
use crate::kinetic_model::poly::{Gauss, PolyM};
use crate::numerics::scalar::Dual;

/// Macroscopic state at a Lagrangian point, each entry carrying its
/// Lagrangian x-derivative. Gradients are Eulerian (`∂X = v⁻¹ ∂x`).
#[derive(Clone, Copy, Debug)]
pub struct LocalJet {
    pub rho: Dual,
    pub w: [Dual; 3],
    pub t: Dual,
    pub v: Dual,
    pub w_grad: [Dual; 3],
    pub t_grad: Dual,
}

impl LocalJet {
    pub fn gauss(&self) -> Gauss<Dual> {
        Gauss { rho: self.rho, w: self.w, t: self.t }
    }
}

/// `Ḡ = L_M⁻¹ P1(ξ1 ∂X M)` with `M = M[ρ, w, T]` and the given gradients.
pub fn leading_micro<S>(g: Gauss<S>, w_grad: [S; 3], t_grad: S, gas: &GasModel) -> PolyM<S>
where
    S: crate::numerics::scalar::Scalar,
{
    PolyM::streaming_source(g, w_grad, t_grad).linearized_inverse(gas)
}

/// `L_M⁻¹[(1/v) P1(ξ1 ∂x Ḡ)]`, the part of `Θ1^1` that carries the
/// second-order microscopic fluxes (the quadratic collision term vanishes
/// identically for relaxation models).
pub fn theta11(j: &LocalJet, gas: &GasModel) -> PolyM<f64> {
    let gbar = leading_micro(j.gauss(), j.w_grad, j.t_grad, gas);
    let gx = gbar.derivative();
    gx.mul_xi1().p1().scale(1.0 / j.v.re).linearized_inverse(gas)
}

/// `[-∫ ½ξ1|ξ|² Θ, -∫ ξ1ξ2 Θ, -∫ ξ1ξ3 Θ]` in closed form.
pub fn n_moments(theta: &PolyM<f64>) -> [f64; 3] {
    let (m, e) = theta.flux_moments();
    [-e, -m[1], -m[2]]
}
