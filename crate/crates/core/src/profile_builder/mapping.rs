//! Lagrangian mass coordinate `x̂` to Eulerian position `X`.
//!
//! `X(x̂, t) = X0(t) + ∫0^x̂ v̄(y, t) dy` with the anchor following the fluid,
//! `dX0/dt = ū1(0, t)`.

use crate::error::{Error, Result};
use crate::profile_builder::ansatz::AnsatzProfile;

/// Monotone map tabulated on a uniform `x̂` grid containing `x̂ = 0`.
#[derive(Clone, Debug)]
pub struct LagrangianMap {
    pub t: f64,
    pub anchor: f64,
    x0: f64,
    h: f64,
    /// `X` at the nodes.
    pos: Vec<f64>,
    /// `∂X/∂x̂ = v̄` at the nodes.
    slope: Vec<f64>,
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
    }
    s * h / 3.0
}

impl LagrangianMap {
    /// `v(x̂) -> (v̄, ∂x̂ v̄)` at time `t`; nodes cover `[-half, half]` with
    /// spacing at most `h_max`.
    pub fn build(v: impl Fn(f64) -> (f64, f64), anchor: f64, t: f64, half: f64, h_max: f64) -> Result<Self> {
        if !(half > 0.0 && h_max > 0.0) {
            return Err(Error::Config("map range and spacing must be positive".into()));
        }
        let m = (half / h_max).ceil() as usize;
        let h = half / m as f64;
        let n = 2 * m + 1;
        let x0 = -half;
        let node = |i: usize| if i == m { 0.0 } else { x0 + h * i as f64 };
        let vals: Vec<(f64, f64)> = (0..n).map(|i| v(node(i))).collect();
        if let Some(i) = vals.iter().position(|(v, _)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::NonMonotone(format!("v̄ = {:e} at x̂ = {}", vals[i].0, node(i))));
        }
        let mut pos = vec![0.0; n];
        pos[m] = anchor;
        // Trapezoid with endpoint-derivative correction (exact for cubics).
        let seg = |a: (f64, f64), b: (f64, f64)| 0.5 * h * (a.0 + b.0) + h * h * (a.1 - b.1) / 12.0;
        for i in m..n - 1 {
            pos[i + 1] = pos[i] + seg(vals[i], vals[i + 1]);
        }
        for i in (0..m).rev() {
            pos[i] = pos[i + 1] - seg(vals[i], vals[i + 1]);
        }
        if let Some(i) = (1..n).find(|&i| !(pos[i] > pos[i - 1])) {
            return Err(Error::NonMonotone(format!("X(x̂) not increasing at x̂ = {}", node(i))));
        }
        Ok(Self { t, anchor, x0, h, pos, slope: vals.iter().map(|p| p.0).collect() })
    }

    /// Map of the ansatz at time `t`, covering Eulerian positions up to at
    /// least `|X| = x_half`.
    pub fn from_ansatz(ans: &AnsatzProfile, t: f64, x_half: f64, h_max: f64) -> Result<Self> {
        let anchor = anchor_position(ans, t);
        let vmin = ans.sim.theta_minus.min(ans.sim.theta_plus) * 0.5;
        let half = (x_half + anchor.abs()) / vmin + 4.0 * h_max;
        Self::build(
            |x| {
                let p = ans.point(x, t);
                (p.v.value(), p.v.dx())
            },
            anchor,
            t,
            half,
            h_max,
        )
    }

    pub fn lagrangian_range(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.h * (self.pos.len() - 1) as f64)
    }

    pub fn eulerian_range(&self) -> (f64, f64) {
        (self.pos[0], *self.pos.last().unwrap())
    }

    fn hermite(&self, i: usize, s: f64) -> (f64, f64) {
        let h = self.h;
        let (p0, p1, m0, m1) = (self.pos[i], self.pos[i + 1], self.slope[i], self.slope[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let val = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * h * m1;
        let der = ((6.0 * s2 - 6.0 * s) * p0 + (3.0 * s2 - 4.0 * s + 1.0) * h * m0 + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * h * m1)
            / h;
        (val, der)
    }

    /// `X(x̂)`.
    pub fn forward(&self, xhat: f64) -> Result<f64> {
        let (a, b) = self.lagrangian_range();
        if xhat < a || xhat > b {
            return Err(Error::RegionOutsideDomain(format!("x̂ = {xhat} outside [{a}, {b}]")));
        }
        let s = (xhat - self.x0) / self.h;
        let i = (s.floor() as usize).min(self.pos.len() - 2);
        Ok(self.hermite(i, s - i as f64).0)
    }

    /// `x̂(X)`: bracketing by bisection on the nodes, then safeguarded Newton
    /// on the cubic.
    pub fn inverse(&self, x: f64) -> Result<f64> {
        let (a, b) = self.eulerian_range();
        if x < a || x > b {
            return Err(Error::RegionOutsideDomain(format!("X = {x} outside [{a}, {b}]")));
        }
        let i = self.pos.partition_point(|p| *p <= x).clamp(1, self.pos.len() - 1) - 1;
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut s = (x - self.pos[i]) / (self.pos[i + 1] - self.pos[i]);
        for _ in 0..60 {
            let (val, der) = self.hermite(i, s);
            let r = val - x;
            if r > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let step = r / (der * self.h);
            let mut next = s - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() < 1e-16 {
                s = next;
                break;
            }
            s = next;
        }
        Ok(self.x0 + self.h * (i as f64 + s))
    }
}

/// `X0(t) = ∫0^t ū1(0, s) ds`, integrated in `σ = √(1+s)` where the
/// integrand is smooth.
pub fn anchor_position(ans: &AnsatzProfile, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    simpson(|sig| 2.0 * sig * ans.point(0.0, sig * sig - 1.0).u[0].value(), 1.0, (1.0 + t).sqrt(), 512)
}

/// Density `ρ(X) = 1/v̄(x̂(X))` integrated between two Eulerian positions;
/// equals the Lagrangian distance between their preimages.
pub fn eulerian_mass(ans: &AnsatzProfile, map: &LagrangianMap, xa: f64, xb: f64, n: usize) -> Result<f64> {
    let h = (xb - xa) / n as f64;
    let rho = |x: f64| -> Result<f64> { Ok(1.0 / ans.point(map.inverse(x)?, map.t).v.value()) };
    let mut s = rho(xa)? + rho(xb)?;
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * rho(xa + h * i as f64)?;
    }
    Ok(s * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic_model::gas::GasModel;
    use crate::profile_builder::corrections::{build_corrections, NhatProfile};
    use crate::profile_builder::similarity::{solve_theta_hat, SimilarityOptions};

    #[test]
    fn unit_specific_volume_is_the_identity() {
        let m = LagrangianMap::build(|_| (1.0, 0.0), 0.0, 0.0, 5.0, 0.1).unwrap();
        for &x in &[-4.9, -1.234, 0.0, 3.3] {
            assert!((m.forward(x).unwrap() - x).abs() < 1e-14);
            assert!((m.inverse(x).unwrap() - x).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_stretch_is_linear() {
        let m = LagrangianMap::build(|_| (2.0, 0.0), 0.7, 0.0, 5.0, 0.1).unwrap();
        for &x in &[-4.9, -1.234, 0.0, 3.3] {
            assert!((m.forward(x).unwrap() - (2.0 * x + 0.7)).abs() < 1e-13);
        }
    }

    #[test]
    fn ansatz_map_round_trips_and_preserves_mass() {
        let gas = GasModel::default();
        let sim = solve_theta_hat(1.0, 1.1, gas.a_law(), &SimilarityOptions { n_nodes: 4001, ..Default::default() }).unwrap();
        let corr = build_corrections(&sim, &gas, NhatProfile::zeros(sim.n_nodes())).unwrap();
        let ans = AnsatzProfile::new(sim, corr, gas, 0.1).unwrap();
        let t = 2.0;
        let map = LagrangianMap::from_ansatz(&ans, t, 15.0, 0.01).unwrap();
        assert!(map.anchor > 0.0);
        for &x in &[-14.0, -2.5, -0.1, 0.0, 0.3, 6.0, 14.5] {
            let xh = map.inverse(x).unwrap();
            assert!((map.forward(xh).unwrap() - x).abs() < 1e-10);
            // Field round trip: Eulerian sample at X equals Lagrangian sample at x̂(X).
            let s1 = ans.point(xh, t).theta.value();
            let s2 = ans.point(map.inverse(map.forward(xh).unwrap()).unwrap(), t).theta.value();
            assert!((s1 - s2).abs() < 1e-8);
        }
        let (xa, xb) = (-6.0, 9.0);
        let mass = eulerian_mass(&ans, &map, xa, xb, 4000).unwrap();
        let lag = map.inverse(xb).unwrap() - map.inverse(xa).unwrap();
        assert!(((mass - lag) / lag).abs() < 1e-8, "{mass} vs {lag}");
    }
}
