//! Univariate truncated Taylor series, used to generate higher η-derivatives
//! of similarity profiles directly from their ODEs.

/// Coefficients `s[k] = f^(k)(a) / k!`.
pub type Series = Vec<f64>;

pub fn mul(a: &[f64], b: &[f64], n: usize) -> Series {
    let mut r = vec![0.0; n];
    for (i, ai) in a.iter().enumerate().take(n) {
        for (j, bj) in b.iter().enumerate().take(n - i) {
            r[i + j] += ai * bj;
        }
    }
    r
}

/// Composition `g(f(s))` from derivatives `g^(k)(f(0))`, `k < n`.
pub fn compose(gd: &[f64], f: &[f64], n: usize) -> Series {
    let mut h = f.to_vec();
    h.resize(n, 0.0);
    h[0] = 0.0;
    let mut out = vec![0.0; n];
    out[0] = gd[0];
    let mut pow = vec![0.0; n];
    pow[0] = 1.0;
    let mut fact = 1.0;
    for k in 1..n.min(gd.len()) {
        pow = mul(&pow, &h, n);
        fact *= k as f64;
        for i in 0..n {
            out[i] += gd[k] / fact * pow[i];
        }
    }
    out
}

/// Converts Taylor coefficients into derivatives `f^(k)(a)`.
pub fn to_derivs(s: &[f64]) -> Vec<f64> {
    let mut fact = 1.0;
    s.iter()
        .enumerate()
        .map(|(k, v)| {
            if k > 0 {
                fact *= k as f64;
            }
            v * fact
        })
        .collect()
}

/// Converts derivatives into Taylor coefficients.
pub fn from_derivs(d: &[f64]) -> Series {
    let mut fact = 1.0;
    d.iter()
        .enumerate()
        .map(|(k, v)| {
            if k > 0 {
                fact *= k as f64;
            }
            v / fact
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_sin() {
        let n = 5;
        let a: f64 = 0.3;
        let f = from_derivs(&[a.sin(), a.cos(), -a.sin(), -a.cos(), a.sin()]);
        let e = a.sin().exp();
        let g = compose(&[e; 5], &f, n);
        let d = to_derivs(&g);
        // d/dx exp(sin x) = cos x exp(sin x)
        assert!((d[1] - a.cos() * e).abs() < 1e-14);
        let d2 = (a.cos().powi(2) - a.sin()) * e;
        assert!((d[2] - d2).abs() < 1e-14);
    }
}
