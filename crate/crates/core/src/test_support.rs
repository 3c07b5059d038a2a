//! Shared oracles for unit tests. Everything here is intentionally written
//! independently of the production solvers it checks.

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

/// Deterministic xorshift values in [-0.5, 0.5); plenty for test data.
pub fn pseudo_random(seed: &mut u64) -> f64 {
    *seed ^= *seed << 13;
    *seed ^= *seed >> 7;
    *seed ^= *seed << 17;
    (*seed % 10_000) as f64 / 10_000.0 - 0.5
}
