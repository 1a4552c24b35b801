//! Least-squares power-law fits in log-log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// Fitted exponent `p` in `y ≈ C·x^p`.
    #[serde(with = "crate::numerics::nullable")]
    pub exponent: f64,
    /// Fitted prefactor `C`.
    #[serde(with = "crate::numerics::nullable")]
    pub prefactor: f64,
    /// Coefficient of determination of the log-log regression.
    #[serde(with = "crate::numerics::nullable")]
    pub r_squared: f64,
    /// Root-mean-square residual in `ln y`.
    #[serde(with = "crate::numerics::nullable")]
    pub rms_residual: f64,
    pub n_points: usize,
    /// Set when every `y` is zero (or below the floor): nothing to fit.
    pub degenerate: bool,
}

/// Values at or below this are treated as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-300;

/// Fits `y = C x^p` by ordinary least squares on `(ln x, ln y)`.
///
/// All-zero data gives a degenerate fit with exponent `+inf` (the quantity
/// vanishes faster than any power). Mixed zero and nonzero data is an error.
pub fn power_law(x: &[f64], y: &[f64], min_points: usize) -> Result<PowerFit> {
    if x.len() != y.len() {
        return Err(Error::InsufficientData("x and y lengths differ".into()));
    }
    if x.len() < min_points {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least {min_points}",
            x.len()
        )));
    }
    if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InsufficientData("abscissae must be positive and finite".into()));
    }
    let zeros = y.iter().filter(|v| v.abs() <= ZERO_FLOOR).count();
    if zeros == y.len() {
        return Ok(PowerFit {
            exponent: f64::INFINITY,
            prefactor: 0.0,
            r_squared: 1.0,
            rms_residual: 0.0,
            n_points: y.len(),
            degenerate: true,
        });
    }
    if zeros > 0 || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("series mixes zero and nonzero values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let (slope, intercept, r2, rms) = linear(&lx, &ly);
    Ok(PowerFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared: r2,
        rms_residual: rms,
        n_points: y.len(),
        degenerate: false,
    })
}

/// Ordinary least squares line; returns (slope, intercept, R², rms residual).
pub fn linear(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut ssr = 0.0;
    for (a, b) in x.iter().zip(y) {
        let r = b - intercept - slope * a;
        ssr += r * r;
    }
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    (slope, intercept, r2, (ssr / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_quadratic_series() {
        let eps = [0.1, 0.05, 0.025];
        let e: Vec<f64> = eps.iter().map(|x| 3.0 * x * x).collect();
        let f = power_law(&eps, &e, 3).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!(f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn all_zero_is_degenerate() {
        let f = power_law(&[1.0, 2.0, 3.0], &[0.0; 3], 3).unwrap();
        assert!(f.degenerate);
    }

    #[test]
    fn too_few_points() {
        assert!(power_law(&[1.0, 2.0], &[1.0, 2.0], 3).is_err());
    }

    proptest! {
        #[test]
        fn recovers_injected_power_laws(p in -3.0f64..3.0, c in 0.01f64..100.0) {
            let x: Vec<f64> = (1..=7).map(|k| 1.0 + k as f64 * 0.8).collect();
            let y: Vec<f64> = x.iter().map(|v| c * v.powf(p)).collect();
            let f = power_law(&x, &y, 5).unwrap();
            prop_assert!((f.exponent - p).abs() < 1e-10);
        }
    }
}
