//! Free transport `∂t f + (ξ1/ε) ∂x f = 0` by finite volumes.
//!
//! The second-order flux is the limited upwind-biased reconstruction with
//! the characteristic time correction `½(1 - ν)`: for linear advection it is
//! TVD, hence positivity preserving, for Courant numbers `ν ≤ 1`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpatialOrder {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2-minmod")]
    MinmodSecond,
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Interface flux times `dt/dx`.
///
/// `s = [f_{i-2}, f_{i-1}, f_i, f_{i+1}]` around the interface between cells
/// `i-1` and `i`; `courant[l] = ξ1 dt / (ε dx)` for entry `l`, and only the
/// first `courant.len()` entries are transported.
pub fn interface_flux(s: [&[f64]; 4], courant: &[f64], order: SpatialOrder, out: &mut [f64]) {
    let n = courant.len();
    let (a, b, c, d) = (&s[0][..n], &s[1][..n], &s[2][..n], &s[3][..n]);
    let out = &mut out[..n];
    match order {
        SpatialOrder::First => {
            for l in 0..n {
                let nu = courant[l];
                out[l] = if nu >= 0.0 { nu * b[l] } else { nu * c[l] };
            }
        }
        SpatialOrder::MinmodSecond => {
            for l in 0..n {
                let nu = courant[l];
                out[l] = if nu >= 0.0 {
                    nu * (b[l] + 0.5 * (1.0 - nu) * minmod(b[l] - a[l], c[l] - b[l]))
                } else {
                    nu * (c[l] - 0.5 * (1.0 + nu) * minmod(c[l] - b[l], d[l] - c[l]))
                };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_flux_is_upwind() {
        let cells: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64, 10.0 * i as f64]).collect();
        let s = [&cells[0][..], &cells[1][..], &cells[2][..], &cells[3][..]];
        let mut out = [0.0; 2];
        interface_flux(s, &[0.5, -0.25], SpatialOrder::First, &mut out);
        assert_eq!(out, [0.5 * 1.0, -0.25 * 20.0]);
    }

    #[test]
    fn limiter_vanishes_at_extrema() {
        let cells = [vec![0.0], vec![1.0], vec![0.5], vec![0.2]];
        let s = [&cells[0][..], &cells[1][..], &cells[2][..], &cells[3][..]];
        let mut out = [0.0];
        interface_flux(s, &[0.4], SpatialOrder::MinmodSecond, &mut out);
        assert_eq!(out[0], 0.4 * 1.0);
    }

    #[test]
    fn minmod_picks_the_smaller_slope_of_equal_sign() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
        assert_eq!(minmod(1.0, -2.0), 0.0);
        assert_eq!(minmod(0.0, 2.0), 0.0);
    }
}
