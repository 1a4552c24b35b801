//! Power-law fits in ε and in `1 + t` with degeneracy handling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::fit::{self, PowerFit};

use super::{DEGENERATE_FLOOR, MIN_EPS_POINTS, MIN_TIME_POINTS};

/// A fit together with the points it used; `fit` is `None` when the data
/// could not be fitted, with the reason in `error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub fit: Option<PowerFit>,
    pub error: Option<String>,
    #[serde(with = "crate::numerics::nullable::seq")]
    pub x: Vec<f64>,
    #[serde(with = "crate::numerics::nullable::seq")]
    pub y: Vec<f64>,
}

impl FitOutcome {
    fn from(x: Vec<f64>, y: Vec<f64>, r: Result<PowerFit>) -> Self {
        match r {
            Ok(f) => Self { fit: Some(f), error: None, x, y },
            Err(e) => Self { fit: None, error: Some(e.to_string()), x, y },
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.exponent)
    }
}

/// Series whose every value is below the floor carry no rate information.
fn fit_or_degenerate(x: &[f64], y: &[f64], min_points: usize) -> Result<PowerFit> {
    if x.len() >= min_points && y.iter().all(|v| v.abs() <= DEGENERATE_FLOOR) {
        return fit::power_law(x, &vec![0.0; y.len()], min_points);
    }
    fit::power_law(x, y, min_points)
}

/// Exponent `p` in `y ≈ C ε^p`.
pub fn eps_fit(eps: &[f64], y: &[f64]) -> FitOutcome {
    FitOutcome::from(eps.to_vec(), y.to_vec(), fit_or_degenerate(eps, y, MIN_EPS_POINTS))
}

/// Exponent `p` in `y ≈ C (1+t)^p` over the samples with `t` in `window`.
pub fn temporal_decay_fit(t: &[f64], y: &[f64], window: [f64; 2]) -> FitOutcome {
    let slack = 1e-9 * (1.0 + window[1].abs());
    let (x, v): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(t, _)| **t >= window[0] - slack && **t <= window[1] + slack)
        .map(|(t, y)| (1.0 + t, *y))
        .unzip();
    let r = if window[0] < 1.0 {
        Err(Error::InsufficientData(format!("window starts at t = {} inside the initial transient", window[0])))
    } else {
        fit_or_degenerate(&x, &v, MIN_TIME_POINTS)
    };
    FitOutcome::from(x, v, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_inverse_decay() {
        let t: Vec<f64> = (0..=16).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 / (1.0 + t)).collect();
        let f = temporal_decay_fit(&t, &y, [1.0, 8.0]);
        let f = f.fit.unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert_eq!(f.n_points, 15);
    }

    #[test]
    fn short_windows_are_rejected() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let f = temporal_decay_fit(&t, &[1.0, 0.5, 0.3, 0.2], [1.0, 4.0]);
        assert!(f.fit.is_none() && f.error.is_some());
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert!(temporal_decay_fit(&t, &t, [0.5, 8.0]).fit.is_none());
    }

    #[test]
    fn machine_zero_series_are_degenerate() {
        let f = eps_fit(&[0.1, 0.05, 0.025], &[1e-16, 0.0, 3e-17]).fit.unwrap();
        assert!(f.degenerate);
    }

    proptest! {
        #[test]
        fn injected_power_laws_in_eps(p in 0.0f64..3.0, c in 0.1f64..10.0) {
            let eps = [0.1f64, 0.05, 0.025, 0.0125];
            let y: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
            let f = eps_fit(&eps, &y).fit.unwrap();
            prop_assert!((f.exponent - p).abs() < 1e-10);
        }
    }
}
