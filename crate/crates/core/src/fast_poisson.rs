//! Fast solver for the corrected five-point system on the box with
//! homogeneous Dirichlet boundary data: a sine transform (DST-I) along y
//! diagonalizes the vertical part, leaving one diagonally dominant
//! tridiagonal system per mode along x.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{CartesianGrid, GridField};
use crate::{Error, Result};

/// Tridiagonal matrix with all three diagonals stored at full length; the
/// first sub-diagonal and last super-diagonal entries are unused.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Multiply by a vector (used by tests and residual checks).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// A tridiagonal matrix together with its right-hand side.
#[derive(Debug, Clone)]
pub struct TridiagonalSystem {
    pub matrix: Tridiagonal,
    pub rhs: Vec<f64>,
}

/// Solve a tridiagonal system by the Thomas algorithm (no pivoting; intended
/// for diagonally dominant systems).
pub fn thomas_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let m = &sys.matrix;
    assert_eq!(sys.rhs.len(), m.len());
    thomas_on_slices(&m.sub, &m.diag, &m.sup, &sys.rhs)
}

/// Thomas sweep on raw diagonals; `sub[0]` and `sup[n-1]` are ignored. Shared
/// by the full solve and the per-block solves of the arrowhead method so both
/// paths are bitwise identical.
pub(crate) fn thomas_on_slices(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut work = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::ZeroPivot(0));
    }
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        work[i - 1] = sup[i - 1] / pivot;
        pivot = diag[i] - sub[i] * work[i - 1];
        if pivot == 0.0 {
            return Err(Error::ZeroPivot(i));
        }
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / pivot;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= work[i] * x[i + 1];
    }
    Ok(x)
}

/// Precomputed transform and eigenvalue data for one grid size and kappa.
pub struct SpectralPlan {
    pub i_count: usize,
    pub j_count: usize,
    pub h: f64,
    pub kappa: f64,
    /// `lambda_k = -(4/h^2) sin^2(k pi / (2J))` for `k = 1..J-1`.
    pub eigenvalues: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("i_count", &self.i_count)
            .field("j_count", &self.j_count)
            .field("kappa", &self.kappa)
            .finish()
    }
}

/// Transform sizes below this use the direct O(n^2) sum.
const DIRECT_DST_LIMIT: usize = 64;

impl SpectralPlan {
    pub fn new(grid: &CartesianGrid, kappa: f64) -> Result<Self> {
        if kappa < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be nonnegative, got {kappa}"
            )));
        }
        let j = grid.j_count;
        if j < 2 || grid.i_count < 2 {
            return Err(Error::EmptyTransform);
        }
        let h = grid.h;
        let eigenvalues: Vec<f64> = (1..j)
            .map(|k| {
                let s = (k as f64 * std::f64::consts::PI / (2.0 * j as f64)).sin();
                -4.0 / (h * h) * s * s
            })
            .collect();
        // Every mode system is strictly diagonally dominant for kappa >= 0.
        for &lambda in &eigenvalues {
            debug_assert!(lambda < 0.0);
            debug_assert!((2.0 / (h * h) - lambda + kappa).abs() >= 2.0 / (h * h));
        }
        let fft = if j - 1 >= DIRECT_DST_LIMIT {
            let mut planner = FftPlanner::new();
            Some(planner.plan_fft_forward(2 * j))
        } else {
            None
        };
        Ok(Self {
            i_count: grid.i_count,
            j_count: grid.j_count,
            h,
            kappa,
            eigenvalues,
            fft,
        })
    }

    /// Number of interior modes (J - 1).
    pub fn mode_count(&self) -> usize {
        self.j_count - 1
    }

    /// Unnormalized DST-I: `out_k = sum_j in_j sin(pi j k / J)`.
    pub fn dst1(&self, input: &[f64]) -> Vec<f64> {
        let n = self.j_count - 1;
        assert_eq!(input.len(), n);
        match &self.fft {
            Some(fft) => {
                // Odd extension of length 2J; the imaginary part of the
                // half-spectrum carries the sine coefficients.
                let len = 2 * self.j_count;
                let mut buf = vec![Complex::new(0.0, 0.0); len];
                for (j, &v) in input.iter().enumerate() {
                    buf[j + 1].re = v;
                    buf[len - 1 - j].re = -v;
                }
                let mut scratch =
                    vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
                fft.process_with_scratch(&mut buf, &mut scratch);
                (1..=n).map(|k| -0.5 * buf[k].im).collect()
            }
            None => {
                let jf = self.j_count as f64;
                (1..=n)
                    .map(|k| {
                        let mut acc = 0.0;
                        for (j, &v) in input.iter().enumerate() {
                            acc += v
                                * (std::f64::consts::PI * (j + 1) as f64 * k as f64 / jf).sin();
                        }
                        acc
                    })
                    .collect()
            }
        }
    }

    /// Inverse DST-I: the forward transform scaled by 2/J.
    pub fn idst1(&self, input: &[f64]) -> Vec<f64> {
        let scale = 2.0 / self.j_count as f64;
        self.dst1(input).into_iter().map(|v| v * scale).collect()
    }

    /// Tridiagonal mode system along x for the given eigenvalue.
    pub fn mode_matrix(&self, lambda: f64) -> Tridiagonal {
        let n = self.i_count - 1;
        let h2 = self.h * self.h;
        Tridiagonal {
            sub: vec![1.0 / h2; n],
            diag: vec![-2.0 / h2 + lambda - self.kappa; n],
            sup: vec![1.0 / h2; n],
        }
    }

    /// Forward transform of all interior columns; returns mode-major storage
    /// `out[k][i - 1]` for mode `k+1` and column `i`.
    pub fn forward_columns(&self, rhs: &GridField) -> Vec<Vec<f64>> {
        let modes = self.mode_count();
        let cols = self.i_count - 1;
        let mut out = vec![vec![0.0; cols]; modes];
        let mut column = vec![0.0; modes];
        for i in 1..self.i_count {
            for j in 1..self.j_count {
                column[j - 1] = rhs.get(i, j);
            }
            let hat = self.dst1(&column);
            for (k, v) in hat.into_iter().enumerate() {
                out[k][i - 1] = v;
            }
        }
        out
    }

    /// Inverse transform from mode-major storage back to a grid field with
    /// zero box boundary values.
    pub fn inverse_columns(&self, modes: &[Vec<f64>], grid: &CartesianGrid) -> GridField {
        let mut field = GridField::zeros(grid);
        let mut spectrum = vec![0.0; self.mode_count()];
        for i in 1..self.i_count {
            for (k, row) in modes.iter().enumerate() {
                spectrum[k] = row[i - 1];
            }
            let column = self.idst1(&spectrum);
            for (j, v) in column.into_iter().enumerate() {
                field.set(i, j + 1, v);
            }
        }
        field
    }
}

/// Solve the corrected interface system `L_h v - kappa v = rhs` with `v = 0`
/// on the box boundary.
pub fn solve_interface_system(
    rhs: &GridField,
    plan: &SpectralPlan,
    grid: &CartesianGrid,
) -> Result<GridField> {
    let mut modes = plan.forward_columns(rhs);
    for (k, row) in modes.iter_mut().enumerate() {
        let matrix = plan.mode_matrix(plan.eigenvalues[k]);
        *row = thomas_on_slices(&matrix.sub, &matrix.diag, &matrix.sup, row)?;
    }
    Ok(plan.inverse_columns(&modes, grid))
}
