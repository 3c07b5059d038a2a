//! Small dense and cyclic-tridiagonal solves shared by the jump, stencil and
//! Schur-complement code. All systems here are tiny (n <= ~10) or banded.

use crate::{Error, Result};

/// LU factorization with partial pivoting of a small dense matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factor a row-major `n x n` matrix.
    pub fn factor(mut a: Vec<f64>, n: usize, context: &'static str) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = a[perm[col] * n + col].abs();
            for row in col + 1..n {
                let v = a[perm[row] * n + col].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if pivot_val == 0.0 {
                return Err(Error::SingularSystem(context));
            }
            perm.swap(col, pivot_row);
            let p = perm[col];
            let diag = a[p * n + col];
            for row in col + 1..n {
                let r = perm[row];
                let factor = a[r * n + col] / diag;
                a[r * n + col] = factor;
                for k in col + 1..n {
                    a[r * n + k] -= factor * a[p * n + k];
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[self.perm[i]];
            for k in 0..i {
                sum -= self.lu[self.perm[i] * n + k] * x[k];
            }
            x[i] = sum;
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[self.perm[i] * n + k] * x[k];
            }
            x[i] /= self.lu[self.perm[i] * n + i];
        }
        x
    }

    /// 1-norm condition estimate via the explicit inverse. Only sensible for
    /// the tiny systems this module handles.
    pub fn condition_estimate(&self, a: &[f64]) -> f64 {
        let n = self.n;
        let mut e = vec![0.0; n];
        let mut inv_norm = 0.0_f64;
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            let s: f64 = col.iter().map(|v| v.abs()).sum();
            inv_norm = inv_norm.max(s);
        }
        one_norm(a, n) * inv_norm
    }
}

fn one_norm(a: &[f64], n: usize) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += a[i * n + j].abs();
        }
        best = best.max(s);
    }
    best
}

/// Solve a cyclic tridiagonal system via the Sherman-Morrison correction.
///
/// The matrix has main diagonal `diag`, sub-diagonal `sub` (entry `i` couples
/// row `i` to `i-1`, with `sub[0]` in the top-right corner) and super-diagonal
/// `sup` (entry `i` couples row `i` to `i+1`, with `sup[n-1]` in the
/// bottom-left corner).
pub fn solve_cyclic_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    if n < 3 {
        return Err(Error::InvalidParameter(
            "cyclic tridiagonal system needs at least 3 rows".into(),
        ));
    }
    let alpha = sup[n - 1]; // corner (n-1, 0)
    let beta = sub[0]; // corner (0, n-1)
    let gamma = -diag[0];

    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;

    let y = plain_tridiagonal(sub, &d, sup, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = plain_tridiagonal(sub, &d, sup, &u)?;

    let factor = (y[0] + beta * y[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    Ok(y.iter().zip(z.iter()).map(|(yi, zi)| yi - factor * zi).collect())
}

// Thomas sweep local to this module so the cyclic solver has no dependency on
// the fast-solver crate modules.
fn plain_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::ZeroPivot(0));
    }
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / pivot;
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::ZeroPivot(i));
        }
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
