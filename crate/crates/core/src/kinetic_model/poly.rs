//! Velocity functions of the form `p(ξ - w) · M[ρ, w, T](ξ)` with `p` a
//! polynomial in the peculiar velocity `c = ξ - w` and `T = Rθ`.
//!
//! This class is closed under everything the profile construction needs:
//! multiplication by `ξ1`, x-differentiation, the projections `P0/P1` and the
//! inverse linearized relaxation operator. All velocity moments reduce to
//! Gaussian moments and are exact. Code is generic over [`Scalar`] so the
//! same expressions evaluated with [`Dual`] inputs give x- or t-derivatives.

use std::sync::OnceLock;

use crate::kinetic_model::gas::GasModel;
use crate::numerics::gauss_moment;
use crate::numerics::scalar::{Dual, Scalar};

/// Highest total degree stored.
pub const MAX_DEGREE: usize = 8;

struct Monomials {
    exps: Vec<[u8; 3]>,
    /// `index[a][b][c]`, or `usize::MAX` beyond the degree bound.
    index: Vec<usize>,
}

const SIDE: usize = MAX_DEGREE + 1;

fn monomials() -> &'static Monomials {
    static M: OnceLock<Monomials> = OnceLock::new();
    M.get_or_init(|| {
        let mut exps = Vec::new();
        let mut index = vec![usize::MAX; SIDE * SIDE * SIDE];
        for d in 0..=MAX_DEGREE {
            for a in (0..=d).rev() {
                for b in (0..=(d - a)).rev() {
                    let c = d - a - b;
                    index[(a * SIDE + b) * SIDE + c] = exps.len();
                    exps.push([a as u8, b as u8, c as u8]);
                }
            }
        }
        Monomials { exps, index }
    })
}

fn mono_index(a: usize, b: usize, c: usize) -> Option<usize> {
    if a + b + c > MAX_DEGREE {
        return None;
    }
    Some(monomials().index[(a * SIDE + b) * SIDE + c])
}

/// Exponent triples in storage order.
pub fn exponents() -> &'static [[u8; 3]] {
    &monomials().exps
}

pub fn n_monomials() -> usize {
    monomials().exps.len()
}

/// Dense polynomial in `(c1, c2, c3)` of total degree at most [`MAX_DEGREE`].
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    pub coef: Vec<S>,
}

impl<S: Scalar> Poly<S> {
    pub fn zero() -> Self {
        Self { coef: vec![S::zero(); n_monomials()] }
    }

    pub fn constant(v: S) -> Self {
        let mut p = Self::zero();
        p.coef[0] = v;
        p
    }

    pub fn monomial(a: usize, b: usize, c: usize, v: S) -> Self {
        let mut p = Self::zero();
        p.coef[mono_index(a, b, c).expect("monomial degree")] = v;
        p
    }

    /// `c_i` for `i` in 0..3.
    pub fn c(i: usize) -> Self {
        let mut e = [0usize; 3];
        e[i] = 1;
        Self::monomial(e[0], e[1], e[2], S::cst(1.0))
    }

    /// `|c|²`.
    pub fn c_sq() -> Self {
        let mut p = Self::zero();
        for i in 0..3 {
            let mut e = [0usize; 3];
            e[i] = 2;
            p.coef[mono_index(e[0], e[1], e[2]).unwrap()] = S::cst(1.0);
        }
        p
    }

    pub fn degree(&self) -> usize {
        let m = monomials();
        m.exps
            .iter()
            .zip(&self.coef)
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, _)| (e[0] + e[1] + e[2]) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { coef: self.coef.iter().zip(&o.coef).map(|(a, b)| *a + *b).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { coef: self.coef.iter().zip(&o.coef).map(|(a, b)| *a - *b).collect() }
    }

    pub fn scale(&self, s: S) -> Self {
        Self { coef: self.coef.iter().map(|a| *a * s).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let m = monomials();
        let mut out = Self::zero();
        for (i, a) in self.coef.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ea = m.exps[i];
            for (j, b) in o.coef.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let eb = m.exps[j];
                let k = mono_index(
                    (ea[0] + eb[0]) as usize,
                    (ea[1] + eb[1]) as usize,
                    (ea[2] + eb[2]) as usize,
                )
                .expect("polynomial product exceeds MAX_DEGREE");
                out.coef[k] += *a * *b;
            }
        }
        out
    }

    /// Multiplies by `c_i`.
    pub fn mul_c(&self, i: usize) -> Self {
        self.mul(&Self::c(i))
    }

    /// `∂p/∂c_i`.
    pub fn deriv(&self, i: usize) -> Self {
        let m = monomials();
        let mut out = Self::zero();
        for (k, a) in self.coef.iter().enumerate() {
            let e = m.exps[k];
            if e[i] == 0 {
                continue;
            }
            let mut f = [e[0] as usize, e[1] as usize, e[2] as usize];
            let n = f[i];
            f[i] -= 1;
            out.coef[mono_index(f[0], f[1], f[2]).unwrap()] += *a * (n as f64);
        }
        out
    }

    pub fn eval(&self, c: [f64; 3]) -> S {
        let m = monomials();
        let mut pw = [[1.0f64; SIDE]; 3];
        for d in 0..3 {
            for k in 1..SIDE {
                pw[d][k] = pw[d][k - 1] * c[d];
            }
        }
        let mut s = S::zero();
        for (k, a) in self.coef.iter().enumerate() {
            let e = m.exps[k];
            s += *a * (pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize]);
        }
        s
    }

    pub fn map_re(&self) -> Poly<f64> {
        Poly { coef: self.coef.iter().map(|a| a.re()).collect() }
    }
}

impl Poly<Dual> {
    pub fn du(&self) -> Poly<f64> {
        Poly { coef: self.coef.iter().map(|a| a.du).collect() }
    }
}

/// Gaussian parameters: density `rho`, mean velocity `w`, variance `t = Rθ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gauss<S> {
    pub rho: S,
    pub w: [S; 3],
    pub t: S,
}

impl<S: Scalar> Gauss<S> {
    pub fn map_re(&self) -> Gauss<f64> {
        Gauss { rho: self.rho.re(), w: [self.w[0].re(), self.w[1].re(), self.w[2].re()], t: self.t.re() }
    }

    /// `E[c^n]` for a centred normal of variance `t`, `n ≤ 2·MAX_DEGREE`.
    fn central_moments(&self) -> Vec<S> {
        let sq = self.t.sqrt();
        let mut out = Vec::with_capacity(2 * MAX_DEGREE + 1);
        let mut pw = S::cst(1.0);
        for n in 0..=2 * MAX_DEGREE {
            out.push(pw * gauss_moment(n));
            pw = pw * sq;
        }
        out
    }

    /// Value of the Maxwellian at `ξ`.
    pub fn density(&self, xi: [f64; 3]) -> f64 {
        let g = self.map_re();
        let mut c2 = 0.0;
        for d in 0..3 {
            c2 += (xi[d] - g.w[d]).powi(2);
        }
        g.rho / (2.0 * std::f64::consts::PI * g.t).powf(1.5) * (-c2 / (2.0 * g.t)).exp()
    }
}

/// `p(ξ - w) · M_g(ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyM<S> {
    pub g: Gauss<S>,
    pub p: Poly<S>,
}

impl<S: Scalar> PolyM<S> {
    pub fn maxwellian(g: Gauss<S>) -> Self {
        Self { g, p: Poly::constant(S::cst(1.0)) }
    }

    pub fn zero(g: Gauss<S>) -> Self {
        Self { g, p: Poly::zero() }
    }

    pub fn with_poly(&self, p: Poly<S>) -> Self {
        Self { g: self.g, p }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.with_poly(self.p.add(&o.p))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.with_poly(self.p.sub(&o.p))
    }

    pub fn scale(&self, s: S) -> Self {
        self.with_poly(self.p.scale(s))
    }

    /// `∫ q(c) p(c) M dξ`.
    pub fn integrate_with(&self, q: &Poly<S>) -> S {
        let e = self.g.central_moments();
        let m = monomials();
        let mut s = S::zero();
        for (i, a) in self.p.coef.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let ea = m.exps[i];
            for (j, b) in q.coef.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let eb = m.exps[j];
                let n0 = (ea[0] + eb[0]) as usize;
                let n1 = (ea[1] + eb[1]) as usize;
                let n2 = (ea[2] + eb[2]) as usize;
                if n0 % 2 == 1 || n1 % 2 == 1 || n2 % 2 == 1 {
                    continue;
                }
                s += *a * *b * e[n0] * e[n1] * e[n2];
            }
        }
        s * self.g.rho
    }

    pub fn integrate(&self) -> S {
        self.integrate_with(&Poly::constant(S::cst(1.0)))
    }

    /// Conserved moments `(∫f, ∫ξ f, ∫|ξ|²/2 f)`.
    pub fn conserved(&self) -> (S, [S; 3], S) {
        let m0 = self.integrate();
        let mc: Vec<S> = (0..3).map(|i| self.integrate_with(&Poly::c(i))).collect();
        let c2 = self.integrate_with(&Poly::c_sq());
        let w = self.g.w;
        let mom = [mc[0] + w[0] * m0, mc[1] + w[1] * m0, mc[2] + w[2] * m0];
        let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        let e = (c2 + (w[0] * mc[0] + w[1] * mc[1] + w[2] * mc[2]) * 2.0 + w2 * m0) * 0.5;
        (m0, mom, e)
    }

    /// Heat flux `∫ c |c|²/2 f dξ` about the Gaussian's mean.
    pub fn heat_flux(&self) -> [S; 3] {
        let c2 = Poly::c_sq();
        let mut q = [S::zero(); 3];
        for (i, qi) in q.iter_mut().enumerate() {
            *qi = self.integrate_with(&c2.mul_c(i)) * 0.5;
        }
        q
    }

    /// `∫ ξ1 ξ_j f dξ` and `∫ ξ1 |ξ|²/2 f dξ` (the flux moments used by the
    /// correction sources).
    pub fn flux_moments(&self) -> ([S; 3], S) {
        let w = self.g.w;
        let one = Poly::constant(S::cst(1.0));
        let xi: Vec<Poly<S>> = (0..3).map(|i| Poly::c(i).add(&one.scale(w[i]))).collect();
        let xi_sq = xi[0].mul(&xi[0]).add(&xi[1].mul(&xi[1])).add(&xi[2].mul(&xi[2]));
        let mut s = [S::zero(); 3];
        for (j, sj) in s.iter_mut().enumerate() {
            *sj = self.integrate_with(&xi[0].mul(&xi[j]));
        }
        let e = self.integrate_with(&xi[0].mul(&xi_sq)) * 0.5;
        (s, e)
    }

    /// Multiplies by `ξ1 = c1 + w1`.
    pub fn mul_xi1(&self) -> Self {
        let p = self.p.mul_c(0).add(&self.p.scale(self.g.w[0]));
        self.with_poly(p)
    }

    /// Orthogonal projection onto `span{1, c1, c2, c3, |c|²}·M` in `⟨·,·⟩_M`.
    pub fn p0(&self) -> Self {
        let g = self.g;
        let rho = g.rho;
        let t = g.t;
        let b0 = self.integrate();
        let bc: Vec<S> = (0..3).map(|i| self.integrate_with(&Poly::c(i))).collect();
        let b4 = self.integrate_with(&Poly::c_sq());
        // Gram block for (1, |c|²): [[ρ, 3ρT], [3ρT, 15ρT²]]; det = 6ρ²T².
        let det = rho * rho * t * t * 6.0;
        let a0 = (b0 * (rho * t * t * 15.0) - b4 * (rho * t * 3.0)) / det;
        let a4 = (b4 * rho - b0 * (rho * t * 3.0)) / det;
        let mut p = Poly::constant(a0).add(&Poly::c_sq().scale(a4));
        for (i, b) in bc.iter().enumerate() {
            p = p.add(&Poly::c(i).scale(*b / (rho * t)));
        }
        self.with_poly(p)
    }

    pub fn p1(&self) -> Self {
        self.sub(&self.p0())
    }

    /// Shakhov correction `S[q] = (1 - Pr)/(5ρT²) · (c·q)(|c|²/T - 5) · M`.
    pub fn shakhov_term(g: Gauss<S>, q: [S; 3], gas: &GasModel) -> Self {
        let pr = gas.prandtl();
        let a = S::cst(1.0 - pr) / (g.rho * g.t * g.t * 5.0);
        let mut cq = Poly::zero();
        for (i, qi) in q.iter().enumerate() {
            cq = cq.add(&Poly::c(i).scale(*qi));
        }
        let shape = Poly::c_sq().scale(g.t.recip()).add(&Poly::constant(S::cst(-5.0)));
        Self { g, p: cq.mul(&shape).scale(a) }
    }

    /// Relaxation frequency of the surrogate at this Gaussian.
    pub fn frequency(&self, gas: &GasModel) -> S {
        let theta = self.g.t / gas.r;
        self.g.rho * theta.powf(1.0 - gas.omega) * gas.nu0
    }

    /// Linearized collision operator `L_M h = ν (S[q(h)] - h)` on microscopic `h`.
    pub fn linearized(&self, gas: &GasModel) -> Self {
        let nu = self.frequency(gas);
        let s = Self::shakhov_term(self.g, self.heat_flux(), gas);
        s.sub(self).scale(nu)
    }

    /// `L_M^{-1} h = -(h + S[q(h)] / Pr) / ν` on microscopic `h`.
    pub fn linearized_inverse(&self, gas: &GasModel) -> Self {
        let nu = self.frequency(gas);
        let pr = gas.prandtl();
        let s = Self::shakhov_term(self.g, self.heat_flux(), gas);
        self.add(&s.scale(S::cst(1.0 / pr))).scale(-nu.recip())
    }

    /// `P1(ξ1 ∂M)` for a Maxwellian whose mean and variance have gradients
    /// `w_x`, `t_x` (the density gradient drops out under `P1`).
    pub fn streaming_source(g: Gauss<S>, w_x: [S; 3], t_x: S) -> Self {
        let t = g.t;
        let c2 = Poly::c_sq();
        // (c1 c·w_x - |c|² w1x / 3) / T
        let mut p = Poly::zero();
        for j in 0..3 {
            p = p.add(&Poly::c(0).mul_c(j).scale(w_x[j] / t));
        }
        p = p.sub(&c2.scale(w_x[0] / (t * 3.0)));
        // c1 (|c|² - 5T) T_x / (2T²)
        let heat = Poly::c(0)
            .mul(&c2.add(&Poly::constant(t * -5.0)))
            .scale(t_x / (t * t * 2.0));
        Self { g, p: p.add(&heat) }
    }

    pub fn map_re(&self) -> PolyM<f64> {
        PolyM { g: self.g.map_re(), p: self.p.map_re() }
    }

    /// Pointwise value at `ξ`.
    pub fn eval(&self, xi: [f64; 3]) -> f64 {
        let g = self.g.map_re();
        let c = [xi[0] - g.w[0], xi[1] - g.w[1], xi[2] - g.w[2]];
        self.p.eval(c).re() * g.density(xi)
    }
}

impl PolyM<Dual> {
    /// Derivative of `p(ξ - w) M(ξ)` at fixed `ξ` along the seeded direction.
    pub fn derivative(&self) -> PolyM<f64> {
        let g = self.g.map_re();
        let rho_d = self.g.rho.du;
        let t_d = self.g.t.du;
        let w_d = [self.g.w[0].du, self.g.w[1].du, self.g.w[2].du];
        let p = self.p.map_re();
        // ∂ ln M = ρ'/ρ - 3T'/(2T) + c·w'/T + |c|² T'/(2T²)
        let mut dlog = Poly::constant(rho_d / g.rho - 1.5 * t_d / g.t)
            .add(&Poly::c_sq().scale(t_d / (2.0 * g.t * g.t)));
        for (i, wd) in w_d.iter().enumerate() {
            dlog = dlog.add(&Poly::c(i).scale(wd / g.t));
        }
        let mut dp = self.p.du();
        for (i, wd) in w_d.iter().enumerate() {
            dp = dp.sub(&p.deriv(i).scale(*wd));
        }
        PolyM { g, p: dp.add(&p.mul(&dlog)) }
    }
}
