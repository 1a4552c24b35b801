//! Truncated bivariate Taylor arithmetic in `(dx, dt)` up to total order 3.
//!
//! A [`Jet`] stores Taylor coefficients `c[i,j] = ∂x^i ∂t^j f / (i! j!)` at a
//! base point. Products and compositions with univariate functions are
//! truncated at the jet's valid order, so the x- and t-derivatives of every
//! ansatz field follow from the η-derivatives of the tabulated profiles
//! by the chain rule alone.

use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_ORDER: usize = 3;
const N: usize = 10;

#[inline]
const fn idx(i: usize, j: usize) -> usize {
    let n = i + j;
    n * (n + 1) / 2 + j
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; N],
    order: usize,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Self { c, order: MAX_ORDER }
    }

    /// The coordinate `x0 + dx`.
    pub fn var_x(x0: f64) -> Self {
        let mut j = Self::constant(x0);
        j.c[idx(1, 0)] = 1.0;
        j
    }

    /// The coordinate `t0 + dt`.
    pub fn var_t(t0: f64) -> Self {
        let mut j = Self::constant(t0);
        j.c[idx(0, 1)] = 1.0;
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative `∂x^i ∂t^j` at the base point.
    pub fn deriv(&self, i: usize, j: usize) -> f64 {
        assert!(i + j <= self.order, "derivative ({i},{j}) beyond jet order {}", self.order);
        self.c[idx(i, j)] * factorial(i) * factorial(j)
    }

    pub fn dx(&self) -> f64 {
        self.deriv(1, 0)
    }

    pub fn dt(&self) -> f64 {
        self.deriv(0, 1)
    }

    /// Jet of `∂x f`, valid to one order less.
    pub fn diff_x(&self) -> Self {
        assert!(self.order >= 1);
        let mut c = [0.0; N];
        for n in 0..self.order {
            for j in 0..=n {
                let i = n - j;
                c[idx(i, j)] = self.c[idx(i + 1, j)] * (i + 1) as f64;
            }
        }
        Self { c, order: self.order - 1 }
    }

    /// Jet of `∂t f`, valid to one order less.
    pub fn diff_t(&self) -> Self {
        assert!(self.order >= 1);
        let mut c = [0.0; N];
        for n in 0..self.order {
            for j in 0..=n {
                let i = n - j;
                c[idx(i, j)] = self.c[idx(i, j + 1)] * (j + 1) as f64;
            }
        }
        Self { c, order: self.order - 1 }
    }

    /// `g(self)` given `derivs = [g(a), g'(a), g''(a), g'''(a)]` at `a = self.value()`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = Self::constant(derivs[0]);
        out.order = self.order;
        let mut pow = Self::constant(1.0);
        pow.order = self.order;
        let mut fact = 1.0;
        for (k, &d) in derivs.iter().enumerate().skip(1).take(self.order) {
            pow = pow * h;
            fact *= k as f64;
            out = out + pow.scale(d / fact);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        for v in r.c.iter_mut() {
            *v *= s;
        }
        r
    }

    pub fn recip(&self) -> Self {
        let a = self.c[0];
        self.compose(&[1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a), -6.0 / (a * a * a * a)])
    }

    pub fn powf(&self, p: f64) -> Self {
        let a = self.c[0];
        let d = [
            a.powf(p),
            p * a.powf(p - 1.0),
            p * (p - 1.0) * a.powf(p - 2.0),
            p * (p - 1.0) * (p - 2.0) * a.powf(p - 3.0),
        ];
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Add for Jet {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for k in 0..N {
            r.c[k] += o.c[k];
        }
        r.order = self.order.min(o.order);
        r
    }
}

impl Sub for Jet {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let order = self.order.min(o.order);
        let mut c = [0.0; N];
        for n1 in 0..=order {
            for j1 in 0..=n1 {
                let a = self.c[idx(n1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for n2 in 0..=(order - n1) {
                    for j2 in 0..=n2 {
                        c[idx(n1 - j1 + n2 - j2, j1 + j2)] += a * o.c[idx(n2 - j2, j2)];
                    }
                }
            }
        }
        Self { c, order }
    }
}

impl Add<f64> for Jet {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        let mut r = self;
        r.c[0] += o;
        r
    }
}

impl Mul<f64> for Jet {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        self.scale(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_and_composition() {
        // f(x,t) = sin(x t) * (1+t)^{-1/2} at (0.7, 0.4)
        let x = Jet::var_x(0.7);
        let t = Jet::var_t(0.4);
        let xt = x * t;
        let a = xt.value();
        let s = xt.compose(&[a.sin(), a.cos(), -a.sin(), -a.cos()]);
        let f = s * (t + 1.0).powf(-0.5);

        let h = 1e-4;
        let ev = |x: f64, t: f64| (x * t).sin() * (1.0 + t).powf(-0.5);
        let fx = (ev(0.7 + h, 0.4) - ev(0.7 - h, 0.4)) / (2.0 * h);
        let ft = (ev(0.7, 0.4 + h) - ev(0.7, 0.4 - h)) / (2.0 * h);
        let fxt = (ev(0.7 + h, 0.4 + h) - ev(0.7 + h, 0.4 - h) - ev(0.7 - h, 0.4 + h)
            + ev(0.7 - h, 0.4 - h))
            / (4.0 * h * h);
        let fxx = (ev(0.7 + h, 0.4) - 2.0 * ev(0.7, 0.4) + ev(0.7 - h, 0.4)) / (h * h);
        assert!((f.value() - ev(0.7, 0.4)).abs() < 1e-15);
        assert!((f.dx() - fx).abs() < 1e-7);
        assert!((f.dt() - ft).abs() < 1e-7);
        assert!((f.deriv(1, 1) - fxt).abs() < 1e-5);
        assert!((f.deriv(2, 0) - fxx).abs() < 1e-5);
        let g = f.diff_x();
        assert_eq!(g.order(), 2);
        assert!((g.dt() - fxt).abs() < 1e-5);
    }

    #[test]
    fn third_order_cubic_exact() {
        let x = Jet::var_x(2.0);
        let f = x * x * x;
        assert!((f.deriv(3, 0) - 6.0).abs() < 1e-14);
        assert!((f.deriv(2, 0) - 12.0).abs() < 1e-14);
        let r = x.recip();
        assert!((r.deriv(3, 0) + 6.0 / 16.0).abs() < 1e-14);
    }
}
