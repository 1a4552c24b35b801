//! Small dense linear solves (Gaussian elimination with partial pivoting).

/// Solves `a x = b` in place for an `n x n` row-major matrix.
///
/// Returns `None` if a pivot falls below `1e-300` or the reciprocal condition
/// estimate (smallest over largest pivot) drops under `rcond_min`.
pub fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N], rcond_min: f64) -> Option<[f64; N]> {
    let mut pmax: f64 = 0.0;
    let mut pmin = f64::INFINITY;
    for k in 0..N {
        let mut p = k;
        for r in k + 1..N {
            if a[r][k].abs() > a[p][k].abs() {
                p = r;
            }
        }
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        pmax = pmax.max(a[k][k].abs());
        pmin = pmin.min(a[k][k].abs());
        for r in k + 1..N {
            let f = a[r][k] / a[k][k];
            if f != 0.0 {
                for c in k..N {
                    a[r][c] -= f * a[k][c];
                }
                b[r] -= f * b[k];
            }
        }
    }
    if pmin < rcond_min * pmax {
        return None;
    }
    let mut x = [0.0; N];
    for k in (0..N).rev() {
        let mut s = b[k];
        for c in k + 1..N {
            s -= a[k][c] * x[c];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

/// Inverse of a small matrix, or `None` if ill-conditioned.
pub fn inverse<const N: usize>(a: [[f64; N]; N], rcond_min: f64) -> Option<[[f64; N]; N]> {
    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let col = solve(a, e, rcond_min)?;
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoting_system() {
        let a = [[0.0, 2.0, 1.0], [1.0, -1.0, 0.0], [3.0, 0.0, 4.0]];
        let x = [1.0, -2.0, 0.5];
        let mut b = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i] += a[i][j] * x[j];
            }
        }
        let s = solve(a, b, 1e-14).unwrap();
        for i in 0..3 {
            assert!((s[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_rejected() {
        let a = [[1.0, 2.0], [2.0, 4.0]];
        assert!(solve(a, [1.0, 1.0], 1e-12).is_none());
    }
}
