//! Pointwise check that temperature gradients drive a flow of the same sign:
//! `0 < c θ_x ≤ u1 ≤ C θ_x` on the parabolic region `|x| ≤ η0 √(1+t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic_solver::DiagnosticsFrame;
use crate::profile_builder::SimilarityProfile;

/// Velocity and temperature gradient sampled at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowFrame {
    pub t: f64,
    pub x: Vec<f64>,
    pub u1: Vec<f64>,
    pub theta_x: Vec<f64>,
}

impl FlowFrame {
    /// Takes `θ_x` by centred differences of the cell temperatures.
    pub fn from_diagnostics(d: &DiagnosticsFrame) -> Self {
        Self { t: d.t, x: d.x.clone(), u1: d.u.iter().map(|u| u[0]).collect(), theta_x: d.theta_x() }
    }

    /// The diffusion wave `(θ̂, a(θ̂) θ̂_x)` with exact derivatives.
    pub fn diffusion_wave(sim: &SimilarityProfile, t: f64, half: f64, n: usize) -> Self {
        let s = (1.0 + t).sqrt();
        let x: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
        let (mut u1, mut theta_x) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for xi in &x {
            let d = sim.eval(xi / s);
            let tx = d[1] / s;
            theta_x.push(tx);
            u1.push(sim.a.value(d[0]) * tx);
        }
        Self { t, x, u1, theta_x }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub n_points: usize,
    /// Extremes of `u1 / θ_x` over the region.
    #[serde(with = "crate::numerics::nullable")]
    pub ratio_min: f64,
    #[serde(with = "crate::numerics::nullable")]
    pub ratio_max: f64,
    /// Smallest `s θ_x` over the region, `s` the sign of `θ+ - θ-`.
    #[serde(with = "crate::numerics::nullable")]
    pub min_signed_theta_x: f64,
    /// Extremes of `θ_x / θ̂_x` over the region.
    pub gradient_ratio: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub eta0: f64,
    /// Sign of `θ+ - θ-`; the inequality is checked after multiplying by it.
    pub sign: f64,
    /// Tightest constants over all sampled times.
    #[serde(with = "crate::numerics::nullable")]
    pub c: f64,
    #[serde(with = "crate::numerics::nullable")]
    pub cap_c: f64,
    pub passed: bool,
    /// `min s θ_x` over every sample: positive when the gradient keeps its sign.
    #[serde(with = "crate::numerics::nullable")]
    pub margin: f64,
    pub samples: Vec<FlowSample>,
}

pub fn flow_induction_check(frames: &[FlowFrame], sim: &SimilarityProfile, eta0: f64) -> Result<FlowReport> {
    if sim.theta_minus == sim.theta_plus {
        return Err(Error::Config("θ- = θ+: no temperature variation to induce a flow".into()));
    }
    if frames.is_empty() {
        return Err(Error::InsufficientData("no frames for the flow check".into()));
    }
    let sign = (sim.theta_plus - sim.theta_minus).signum();
    let mut samples = Vec::with_capacity(frames.len());
    for f in frames {
        let r = eta0 * (1.0 + f.t).sqrt();
        let (lo, hi) = (f.x[0], f.x[f.x.len() - 1]);
        if -r < lo || r > hi {
            return Err(Error::RegionOutsideDomain(format!("|x| ≤ {r} at t = {} leaves [{lo}, {hi}]", f.t)));
        }
        let s = (1.0 + f.t).sqrt();
        let mut sample = FlowSample {
            t: f.t,
            n_points: 0,
            ratio_min: f64::INFINITY,
            ratio_max: f64::NEG_INFINITY,
            min_signed_theta_x: f64::INFINITY,
            gradient_ratio: [f64::INFINITY, f64::NEG_INFINITY],
        };
        for j in 0..f.x.len() {
            if f.x[j].abs() > r {
                continue;
            }
            let tx = f.theta_x[j];
            let ratio = f.u1[j] / tx;
            sample.n_points += 1;
            sample.min_signed_theta_x = sample.min_signed_theta_x.min(sign * tx);
            sample.ratio_min = sample.ratio_min.min(ratio);
            sample.ratio_max = sample.ratio_max.max(ratio);
            let hat = sim.eval(f.x[j] / s)[1] / s;
            sample.gradient_ratio[0] = sample.gradient_ratio[0].min(tx / hat);
            sample.gradient_ratio[1] = sample.gradient_ratio[1].max(tx / hat);
        }
        if sample.n_points == 0 {
            return Err(Error::InsufficientData(format!("no grid points in |x| ≤ {r} at t = {}", f.t)));
        }
        samples.push(sample);
    }
    let c = samples.iter().map(|s| s.ratio_min).fold(f64::INFINITY, f64::min);
    let cap_c = samples.iter().map(|s| s.ratio_max).fold(f64::NEG_INFINITY, f64::max);
    let margin = samples.iter().map(|s| s.min_signed_theta_x).fold(f64::INFINITY, f64::min);
    let passed = margin > 0.0 && c > 0.0 && cap_c.is_finite();
    Ok(FlowReport { eta0, sign, c, cap_c, passed, margin, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic_model::gas::GasModel;
    use crate::profile_builder::{solve_theta_hat, SimilarityOptions};

    fn sim(lo: f64, hi: f64) -> SimilarityProfile {
        let opts = SimilarityOptions { n_nodes: 2001, ..Default::default() };
        solve_theta_hat(lo, hi, GasModel::default().a_law(), &opts).unwrap()
    }

    #[test]
    fn diffusion_wave_ratio_is_the_diffusivity() {
        let s = sim(1.0, 1.1);
        let a = GasModel::default().a_law();
        let frames: Vec<FlowFrame> = (0..=8).map(|t| FlowFrame::diffusion_wave(&s, t as f64, 10.0, 801)).collect();
        let r = flow_induction_check(&frames, &s, 1.0).unwrap();
        assert!(r.passed);
        let (amin, amax) = (a.value(1.1), a.value(1.0));
        assert!(r.c >= amin - 1e-12 && r.cap_c <= amax + 1e-12, "{} {}", r.c, r.cap_c);
        for smp in &r.samples {
            assert!((smp.gradient_ratio[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mirrored_profile_passes_with_negative_gradients() {
        let s = sim(1.1, 1.0);
        let frames: Vec<FlowFrame> = (0..=4).map(|t| FlowFrame::diffusion_wave(&s, t as f64, 10.0, 401)).collect();
        let r = flow_induction_check(&frames, &s, 1.0).unwrap();
        assert_eq!(r.sign, -1.0);
        assert!(r.passed && r.c > 0.0);
        assert!(frames.iter().all(|f| f.u1.iter().zip(&f.x).all(|(u, x)| x.abs() > 2.3 || *u < 0.0)));
    }

    #[test]
    fn reversed_flow_fails() {
        let s = sim(1.0, 1.1);
        let mut f = FlowFrame::diffusion_wave(&s, 0.0, 10.0, 401);
        f.u1.iter_mut().for_each(|u| *u = -*u);
        assert!(!flow_induction_check(&[f], &s, 1.0).unwrap().passed);
    }

    #[test]
    fn region_outside_the_domain_is_an_error() {
        let s = sim(1.0, 1.1);
        let f = FlowFrame::diffusion_wave(&s, 8.0, 2.0, 101);
        assert!(matches!(flow_induction_check(&[f], &s, 1.0), Err(Error::RegionOutsideDomain(_))));
    }
}
