//! Small numerical building blocks shared by the physics modules.

pub mod dense;
pub mod fit;
pub mod interp;
pub mod jet;
pub mod nullable;
pub mod scalar;
pub mod series;
pub mod tridiag;

/// `E[Z^n]` for a standard normal `Z`: `(n-1)!!` for even `n`, zero for odd.
pub fn gauss_moment(n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let mut r = 1.0;
    let mut k = n as i64 - 1;
    while k > 1 {
        r *= k as f64;
        k -= 2;
    }
    r
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(h: f64, y: &[f64]) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n - 1])),
    }
}
