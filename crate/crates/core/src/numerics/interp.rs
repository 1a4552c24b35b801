//! Tabulated smooth profiles on a uniform grid with stored derivatives.

use serde::{Deserialize, Serialize};

/// A function tabulated on a uniform grid together with its first `K`
/// derivatives at every node.
///
/// Derivative `k` is reconstructed between nodes by cubic Hermite
/// interpolation of `(f^(k), f^(k+1))`, so `eval` returns derivatives up to
/// order `K - 1` with fourth-order accuracy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tabulated {
    pub x0: f64,
    pub h: f64,
    /// `derivs[k][i]` is `f^(k)(x0 + i h)`.
    pub derivs: Vec<Vec<f64>>,
}

impl Tabulated {
    pub fn new(x0: f64, h: f64, derivs: Vec<Vec<f64>>) -> Self {
        assert!(h > 0.0 && derivs.len() >= 2);
        let n = derivs[0].len();
        assert!(n >= 2 && derivs.iter().all(|d| d.len() == n));
        Self { x0, h, derivs }
    }

    pub fn len(&self) -> usize {
        self.derivs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_end(&self) -> f64 {
        self.x0 + self.h * (self.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + self.h * i as f64
    }

    /// Highest derivative order returned by [`Tabulated::eval`].
    pub fn max_order(&self) -> usize {
        self.derivs.len() - 2
    }

    /// Derivatives `0..=max_order` at `x`. Outside the table the end values
    /// are held constant with vanishing derivatives (profiles are flat there).
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let m = self.max_order();
        let n = self.len();
        if x <= self.x0 || x >= self.x_end() {
            let i = if x <= self.x0 { 0 } else { n - 1 };
            let mut out = vec![0.0; m + 1];
            out[0] = self.derivs[0][i];
            return out;
        }
        let s = (x - self.x0) / self.h;
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let h = self.h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (0..=m)
            .map(|k| {
                let f = &self.derivs[k];
                let d = &self.derivs[k + 1];
                h00 * f[i] + h10 * h * d[i] + h01 * f[i + 1] + h11 * h * d[i + 1]
            })
            .collect()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }
}

/// Piecewise-linear interpolation on a monotone increasing abscissa.
pub fn linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubic_and_derivatives() {
        let h = 0.25;
        let xs: Vec<f64> = (0..9).map(|i| -1.0 + h * i as f64).collect();
        let f = |x: f64| x * x * x - 2.0 * x;
        let d = vec![
            xs.iter().map(|&x| f(x)).collect(),
            xs.iter().map(|&x| 3.0 * x * x - 2.0).collect(),
            xs.iter().map(|&x| 6.0 * x).collect(),
            xs.iter().map(|_| 6.0).collect(),
        ];
        let t = Tabulated::new(-1.0, h, d);
        for &x in &[-0.9, -0.13, 0.377, 0.91] {
            let e = t.eval(x);
            assert!((e[0] - f(x)).abs() < 1e-14);
            assert!((e[1] - (3.0 * x * x - 2.0)).abs() < 1e-13);
            assert!((e[2] - 6.0 * x).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_interp() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [0.0, 2.0, 6.0];
        assert!((linear(&xs, &ys, 2.0) - 4.0).abs() < 1e-15);
        assert_eq!(linear(&xs, &ys, -1.0), 0.0);
    }
}
