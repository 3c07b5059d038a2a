#![allow(dead_code)]

//! Oracles shared by the integration suites, written independently of the
//! production solvers they check.

/// Gaussian elimination with partial pivoting on a dense row-major matrix.
pub fn dense_solve_oracle(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            x[r] -= f * x[col];
        }
    }
    for r in (0..n).rev() {
        for c in r + 1..n {
            x[r] -= m[r * n + c] * x[c];
        }
        x[r] /= m[r * n + r];
    }
    x
}

/// Deterministic xorshift values in [-0.5, 0.5).
pub fn pseudo_random(seed: &mut u64) -> f64 {
    *seed ^= *seed << 13;
    *seed ^= *seed >> 7;
    *seed ^= *seed << 17;
    (*seed % 10_000) as f64 / 10_000.0 - 0.5
}

/// Least-squares slope of log2(error) against refinement level; the
/// standard observed order from a grid sequence with halved spacing.
pub fn least_squares_order(errors: &[f64]) -> f64 {
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let n = ys.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let num: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, y)| (i as f64 - xbar) * (y - ybar))
        .sum();
    let den: f64 = (0..ys.len()).map(|i| (i as f64 - xbar).powi(2)).sum();
    -num / den
}

/// First positive zero of the Bessel function J1 (the first nontrivial
/// Neumann eigenvalue parameter of the disk Laplacian).
pub const J1_FIRST_ZERO: f64 = 3.831705970207512;

/// Bessel J0 by its power series; accurate to machine precision for |z| <= 5.
pub fn bessel_j0(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..40 {
        term *= -q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}
