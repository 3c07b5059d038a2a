//! Boundary integral equation driver.
//!
//! A Dirichlet problem `Δu - κu = f, u = g_D` is reformulated as the
//! second-kind equation `(1/2 I + W) φ = g_D - Yf` for a double-layer density
//! φ; a Neumann problem uses `(1/2 I - dS/dn) ψ = g_N - d(Yf)/dn`. Neither
//! operator is ever assembled: one application is an interface solve on the
//! box (corrected right-hand side + fast sine-transform solver) followed by
//! one-sided interpolation at the control points. The interior limit of the
//! interface solution is exactly the operator value; the half-density term
//! comes out of the jump relation, not an explicit addition.
//!
//! The density equation is solved by restarted GMRES (modified Gram-Schmidt,
//! Givens least squares) or by Richardson iteration, and the converged
//! density plus the volume term are assembled into the final grid solution
//! with one more interface solve.

use std::sync::Arc;

use crate::correction::{base_rhs, correct_rhs};
use crate::fast_poisson::{solve_interface_system, SpectralPlan};
use crate::geometry::{
    discretize_boundary, BoundaryFrame, ControlPointSet, ParametricBoundary, Side,
};
use crate::grid::{
    classify_nodes, find_intersections, CartesianGrid, GridField, IntersectionSet,
    NodeClassification,
};
use crate::interpolation::{one_sided_value, select_stencil, StencilSelection};
use crate::jumps::{fit_density, jumps_at, InterfaceSpec, JumpData, SourceTerm};
use crate::partition::{
    distributed_apply, partition_grid, DistributedPlan, Extraction, MessageRecord, SlabPartition,
};
use crate::{Error, Result};

/// Scalar function on the boundary (by position).
pub type BoundaryFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Boundary condition of the BVP.
#[derive(Clone)]
pub enum BoundaryCondition {
    Dirichlet(BoundaryFn),
    Neumann(BoundaryFn),
}

impl std::fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryCondition::Dirichlet(_) => f.write_str("Dirichlet"),
            BoundaryCondition::Neumann(_) => f.write_str("Neumann"),
        }
    }
}

/// Density iteration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationScheme {
    Gmres,
    Richardson,
}

/// Iteration controls.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub scheme: IterationScheme,
    /// Relative residual tolerance on the boundary equation.
    pub tolerance: f64,
    /// GMRES restart dimension.
    pub restart: usize,
    pub max_restarts: usize,
    /// Richardson relaxation factor, in (0, 1].
    pub gamma: f64,
    pub max_iterations: usize,
    /// Worker count for the slab-partitioned solver; 1 runs sequentially.
    pub workers: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            scheme: IterationScheme::Gmres,
            tolerance: 1e-8,
            restart: 30,
            max_restarts: 50,
            gamma: 0.8,
            max_iterations: 2000,
            workers: 1,
        }
    }
}

/// Full description of one boundary value problem.
#[derive(Debug, Clone)]
pub struct BvpSpec {
    pub kappa: f64,
    pub boundary_condition: BoundaryCondition,
    pub source: Option<SourceTerm>,
    pub boundary: ParametricBoundary,
    pub grid: CartesianGrid,
    /// Control point spacing; defaults to two grid spacings.
    pub control_spacing: Option<f64>,
    pub options: SolverOptions,
}

/// Iteration diagnostics.
#[derive(Debug, Clone)]
pub struct IterationStats {
    pub scheme: IterationScheme,
    /// Restart cycles (GMRES) or converged sweeps flag (Richardson).
    pub outer_iterations: usize,
    /// Arnoldi steps (GMRES) or Richardson sweeps.
    pub inner_iterations: usize,
    /// Total interface solves spent in the operator.
    pub operator_applications: usize,
    /// Relative residual after each recorded step.
    pub residual_history: Vec<f64>,
}

impl IterationStats {
    fn new(scheme: IterationScheme) -> Self {
        Self {
            scheme,
            outer_iterations: 0,
            inner_iterations: 0,
            operator_applications: 0,
            residual_history: Vec::new(),
        }
    }
}

/// Converged solution of a BVP.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Grid solution masked to the interior (exterior nodes are zero).
    pub field: GridField,
    /// Unmasked interface solution of the constant-shifted problem on the
    /// whole box (needed to re-extract boundary data, whose stencils reach
    /// exterior nodes). The physical solution is this plus `constant_shift`
    /// inside the domain.
    pub interface_field: GridField,
    /// Constant split off before solving; see [`KfbiSolver::solve_with_source`].
    pub constant_shift: f64,
    /// Interior-limit values at the control points.
    pub boundary_values: Vec<f64>,
    /// Interior-limit normal derivatives at the control points.
    pub boundary_normal_derivatives: Vec<f64>,
    /// Converged boundary density.
    pub density: Vec<f64>,
    pub stats: IterationStats,
}

/// Boundary data extraction requested from an interface solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMode {
    Value,
    NormalDerivative,
}

/// Prepared solver state for one geometry/grid/kappa combination.
pub struct KfbiSolver {
    spec: BvpSpec,
    classification: NodeClassification,
    intersections: IntersectionSet,
    control: ControlPointSet,
    stencils: Vec<StencilSelection>,
    plan: Arc<SpectralPlan>,
    partition: Option<(SlabPartition, DistributedPlan)>,
    audit: std::sync::Mutex<Vec<MessageRecord>>,
}

impl KfbiSolver {
    pub fn new(spec: BvpSpec) -> Result<Self> {
        let opts = &spec.options;
        if !(opts.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                opts.tolerance
            )));
        }
        if !(opts.gamma > 0.0 && opts.gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Richardson gamma must lie in (0, 1], got {}",
                opts.gamma
            )));
        }
        if opts.restart == 0 {
            return Err(Error::InvalidParameter(
                "GMRES restart must be at least 1".into(),
            ));
        }
        if opts.workers == 0 {
            return Err(Error::InvalidParameter(
                "worker count must be at least 1".into(),
            ));
        }
        if spec.kappa < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kappa must be nonnegative, got {}",
                spec.kappa
            )));
        }
        // A pure Neumann Laplace problem is only defined up to a constant.
        if spec.kappa == 0.0 && matches!(spec.boundary_condition, BoundaryCondition::Neumann(_)) {
            return Err(Error::NeumannNullspace);
        }

        let classification = classify_nodes(&spec.grid, &spec.boundary)?;
        let intersections = find_intersections(&spec.grid, &classification, &spec.boundary)?;
        let spacing = spec.control_spacing.unwrap_or(2.0 * spec.grid.h);
        let control = discretize_boundary(&spec.boundary, spacing)?;
        let stencils = control
            .iter()
            .map(|p| select_stencil(&spec.grid, &classification, p.position))
            .collect::<Result<Vec<_>>>()?;
        let plan = Arc::new(SpectralPlan::new(&spec.grid, spec.kappa)?);
        let partition = if opts.workers > 1 {
            let slab = partition_grid(&spec.grid, opts.workers)?;
            let dplan = DistributedPlan::new(&slab, &plan)?;
            Some((slab, dplan))
        } else {
            None
        };
        Ok(Self {
            spec,
            classification,
            intersections,
            control,
            stencils,
            plan,
            partition,
            audit: std::sync::Mutex::new(Vec::new()),
        })
    }

    pub fn spec(&self) -> &BvpSpec {
        &self.spec
    }

    pub fn control_points(&self) -> &ControlPointSet {
        &self.control
    }

    pub fn classification(&self) -> &NodeClassification {
        &self.classification
    }

    /// Messages recorded by the partitioned backend so far.
    pub fn message_audit(&self) -> Vec<MessageRecord> {
        self.audit.lock().unwrap().clone()
    }

    fn frame_of(&self, m: usize) -> BoundaryFrame {
        let p = self.control.point(m);
        BoundaryFrame {
            point: p.position,
            tangent: p.tangent,
            normal: p.normal,
            curvature: p.curvature,
        }
    }

    /// Jumps of the given interface spec at every control point.
    pub fn control_jumps(&self, spec: &InterfaceSpec) -> Result<Vec<JumpData>> {
        (0..self.control.len())
            .map(|m| {
                let frame = self.frame_of(m);
                jumps_at(
                    spec,
                    &self.spec.boundary,
                    &frame,
                    self.control.point(m).arc_length,
                )
            })
            .collect()
    }

    /// One interface solve plus boundary extraction. The distributed backend
    /// runs corrections, transforms and extraction inside slab workers.
    fn interface_apply(
        &self,
        spec: &InterfaceSpec,
        mode: ExtractionMode,
    ) -> Result<(Vec<f64>, GridField)> {
        let jumps = self.control_jumps(spec)?;
        match &self.partition {
            None => {
                let base = base_rhs(spec, &self.spec.grid, &self.classification);
                let corrected = correct_rhs(
                    &base,
                    spec,
                    &self.spec.grid,
                    &self.classification,
                    &self.intersections,
                    &self.spec.boundary,
                )?;
                let field = solve_interface_system(&corrected.field, &self.plan, &self.spec.grid)?;
                let values = self.extract(&field, &jumps, mode)?;
                Ok((values, field))
            }
            Some((slab, dplan)) => {
                let extraction = match mode {
                    ExtractionMode::Value => Extraction::Value,
                    ExtractionMode::NormalDerivative => Extraction::NormalDerivative,
                };
                let mut audit = self.audit.lock().unwrap();
                distributed_apply(
                    slab,
                    dplan,
                    &self.plan,
                    &self.spec.grid,
                    &self.spec.boundary,
                    &self.classification,
                    &self.intersections,
                    &self.control,
                    &self.stencils,
                    spec,
                    &jumps,
                    extraction,
                    &mut audit,
                )
            }
        }
    }

    /// Extract boundary data of an interface solution at all control points.
    pub fn extract(
        &self,
        field: &GridField,
        jumps: &[JumpData],
        mode: ExtractionMode,
    ) -> Result<Vec<f64>> {
        (0..self.control.len())
            .map(|m| {
                let data = one_sided_value(field, &self.stencils[m], &jumps[m])?;
                Ok(match mode {
                    ExtractionMode::Value => data.value,
                    ExtractionMode::NormalDerivative => {
                        let n = self.control.point(m).normal;
                        n.x * data.dx + n.y * data.dy
                    }
                })
            })
            .collect()
    }

    /// Boundary trace of the volume potential `Yf` (value or normal
    /// derivative) together with the potential field itself.
    pub fn eval_volume_potential(&self, mode: ExtractionMode) -> Result<(Vec<f64>, GridField)> {
        self.eval_volume_potential_of(self.spec.source.as_ref(), mode)
    }

    fn eval_volume_potential_of(
        &self,
        source: Option<&SourceTerm>,
        mode: ExtractionMode,
    ) -> Result<(Vec<f64>, GridField)> {
        match source {
            None => Ok((
                vec![0.0; self.control.len()],
                GridField::zeros(&self.spec.grid),
            )),
            Some(source) => {
                let spec = InterfaceSpec::volume(source.clone(), self.spec.kappa);
                self.interface_apply(&spec, mode)
            }
        }
    }

    /// Apply the Dirichlet boundary operator: the interior limit of the
    /// double-layer interface solution, `(1/2 I + W) phi`.
    pub fn apply_kd(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let density = fit_density(&self.control, phi)?;
        let spec = InterfaceSpec::double_layer(density, self.spec.kappa);
        Ok(self.interface_apply(&spec, ExtractionMode::Value)?.0)
    }

    /// Apply the Neumann boundary operator: the interior-limit normal
    /// derivative of the single-layer interface solution,
    /// `(1/2 I - dS/dn) psi`.
    pub fn apply_kn(&self, psi: &[f64]) -> Result<Vec<f64>> {
        let density = fit_density(&self.control, psi)?;
        let spec = InterfaceSpec::single_layer(density, self.spec.kappa);
        Ok(self
            .interface_apply(&spec, ExtractionMode::NormalDerivative)?
            .0)
    }

    /// Solve the boundary value problem with the spec's source term.
    pub fn solve(&self) -> Result<Solution> {
        self.solve_with_source(self.spec.source.clone())
    }

    /// Solve with a replacement source term, reusing all precomputed
    /// geometry, classification, stencils and transform plans (time stepping
    /// feeds a fresh source every step).
    ///
    /// The problem is shifted by a constant before solving: `u = c + w` with
    /// `(Δ - κ) w = f + κ c` and correspondingly reduced boundary data. The
    /// shift removes the constant mode from the layer the zero-extended
    /// source induces outside the domain, and makes constant solutions exact
    /// (their shifted problem has zero data).
    pub fn solve_with_source(&self, source: Option<SourceTerm>) -> Result<Solution> {
        let (bc_fn, mode): (&BoundaryFn, ExtractionMode) = match &self.spec.boundary_condition {
            BoundaryCondition::Dirichlet(g) => (g, ExtractionMode::Value),
            BoundaryCondition::Neumann(g) => (g, ExtractionMode::NormalDerivative),
        };
        let boundary_data: Vec<f64> = (0..self.control.len())
            .map(|m| {
                let p = self.control.point(m).position;
                bc_fn(p.x, p.y)
            })
            .collect();
        let shift = match mode {
            // Dirichlet: center the boundary data.
            ExtractionMode::Value => {
                boundary_data.iter().sum::<f64>() / boundary_data.len().max(1) as f64
            }
            // Neumann with κ > 0: center the source trace at -mean(f)/κ.
            ExtractionMode::NormalDerivative => match &source {
                Some(src) if self.spec.kappa > 0.0 => {
                    let mean = (0..self.control.len())
                        .map(|m| {
                            src.trace(&self.spec.boundary, self.control.point(m).arc_length)
                        })
                        .sum::<f64>()
                        / self.control.len().max(1) as f64;
                    -mean / self.spec.kappa
                }
                _ => 0.0,
            },
        };
        let source = SourceTerm::shifted(source, self.spec.kappa * shift);

        // Reduced boundary data: shifted g minus the volume potential trace.
        let (vol_trace, _) = self.eval_volume_potential_of(source.as_ref(), mode)?;
        let g_shift = match mode {
            ExtractionMode::Value => shift,
            ExtractionMode::NormalDerivative => 0.0,
        };
        let rhs: Vec<f64> = boundary_data
            .iter()
            .zip(vol_trace.iter())
            .map(|(g, vol)| g - g_shift - vol)
            .collect();

        let opts = &self.spec.options;
        let operator = |density: &[f64]| -> Result<Vec<f64>> {
            match mode {
                ExtractionMode::Value => self.apply_kd(density),
                ExtractionMode::NormalDerivative => self.apply_kn(density),
            }
        };
        let (density, mut stats) = match opts.scheme {
            IterationScheme::Gmres => gmres_solve(
                operator,
                &rhs,
                opts.restart,
                opts.tolerance,
                opts.max_restarts,
            )?,
            IterationScheme::Richardson => richardson_solve(
                operator,
                &rhs,
                opts.gamma,
                opts.tolerance,
                opts.max_iterations,
            )?,
        };
        if source.is_some() {
            stats.operator_applications += 1;
        }

        // Final assembly: one combined interface solve with the converged
        // density plus the volume term.
        let layer = fit_density(&self.control, &density)?;
        let spec = match mode {
            ExtractionMode::Value => InterfaceSpec::double_layer(layer, self.spec.kappa),
            ExtractionMode::NormalDerivative => {
                InterfaceSpec::single_layer(layer, self.spec.kappa)
            }
        }
        .with_source(source);
        let (shifted_values, interface_field) =
            self.interface_apply(&spec, ExtractionMode::Value)?;
        let jumps = self.control_jumps(&spec)?;
        let boundary_normal_derivatives =
            self.extract(&interface_field, &jumps, ExtractionMode::NormalDerivative)?;
        let boundary_values = shifted_values.iter().map(|v| v + shift).collect();

        let mut field = interface_field.clone();
        for j in 0..self.spec.grid.ny() {
            for i in 0..self.spec.grid.nx() {
                if self.classification.side(i, j) == Side::Exterior {
                    field.set(i, j, 0.0);
                } else {
                    field.add(i, j, shift);
                }
            }
        }
        Ok(Solution {
            field,
            interface_field,
            constant_shift: shift,
            boundary_values,
            boundary_normal_derivatives,
            density,
            stats,
        })
    }

    /// Interior error norms against an exact solution: (scaled l2, max).
    pub fn error_norms(&self, field: &GridField, exact: impl Fn(f64, f64) -> f64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut max = 0.0_f64;
        for j in 0..self.spec.grid.ny() {
            for i in 0..self.spec.grid.nx() {
                if self.classification.is_interior(i, j) {
                    let e = field.get(i, j) - exact(self.spec.grid.x(i), self.spec.grid.y(j));
                    sum += e * e;
                    count += 1;
                    max = max.max(e.abs());
                }
            }
        }
        ((sum / count.max(1) as f64).sqrt(), max)
    }
}

/// Scaled boundary norm `sqrt(sum v^2 / M)`.
pub fn boundary_norm(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Richardson iteration `phi <- phi + gamma (rhs - K phi)` from a zero
/// initial guess, stopping on the relative residual.
pub fn richardson_solve<F>(
    mut operator: F,
    rhs: &[f64],
    gamma: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, IterationStats)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = rhs.len();
    let mut stats = IterationStats::new(IterationScheme::Richardson);
    let rhs_norm = l2(rhs);
    let mut density = vec![0.0; n];
    if rhs_norm == 0.0 {
        stats.residual_history.push(0.0);
        return Ok((density, stats));
    }
    let mut residual = rhs.to_vec();
    stats.residual_history.push(1.0);
    for _ in 0..max_iterations {
        for (d, r) in density.iter_mut().zip(residual.iter()) {
            *d += gamma * r;
        }
        let applied = operator(&density)?;
        stats.operator_applications += 1;
        stats.inner_iterations += 1;
        for ((r, rhs_v), k_v) in residual.iter_mut().zip(rhs).zip(applied.iter()) {
            *r = rhs_v - k_v;
        }
        let rel = l2(&residual) / rhs_norm;
        stats.residual_history.push(rel);
        if rel < tolerance {
            stats.outer_iterations = 1;
            return Ok((density, stats));
        }
    }
    Err(Error::NoConvergence {
        iterations: stats.operator_applications,
        residual: *stats.residual_history.last().unwrap(),
    })
}

/// Restarted GMRES with modified Gram-Schmidt orthogonalization and Givens
/// least squares, from a zero initial guess. Convergence reached inside a
/// cycle is confirmed with a true residual at the next restart boundary.
pub fn gmres_solve<F>(
    mut operator: F,
    rhs: &[f64],
    restart: usize,
    tolerance: f64,
    max_restarts: usize,
) -> Result<(Vec<f64>, IterationStats)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = rhs.len();
    let mut stats = IterationStats::new(IterationScheme::Gmres);
    let rhs_norm = l2(rhs);
    let mut x = vec![0.0; n];
    if rhs_norm == 0.0 {
        stats.residual_history.push(0.0);
        return Ok((x, stats));
    }

    let mut last_rel = 1.0;
    for cycle in 0..max_restarts {
        stats.outer_iterations = cycle + 1;
        let residual = if cycle == 0 {
            rhs.to_vec()
        } else {
            let applied = operator(&x)?;
            stats.operator_applications += 1;
            rhs.iter().zip(applied).map(|(b, k)| b - k).collect()
        };
        let beta = l2(&residual);
        last_rel = beta / rhs_norm;
        stats.residual_history.push(last_rel);
        if last_rel < tolerance {
            return Ok((x, stats));
        }

        // Arnoldi process with on-the-fly Givens reduction.
        let mut basis: Vec<Vec<f64>> = vec![residual.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0_f64; restart]; restart + 1];
        let mut cos = vec![0.0_f64; restart];
        let mut sin = vec![0.0_f64; restart];
        let mut g = vec![0.0_f64; restart + 1];
        g[0] = beta;
        let mut steps = 0;
        for j in 0..restart {
            let mut w = operator(&basis[j])?;
            stats.operator_applications += 1;
            stats.inner_iterations += 1;
            steps = j + 1;
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                hess[i][j] = hij;
                for (wv, bv) in w.iter_mut().zip(basis[i].iter()) {
                    *wv -= hij * bv;
                }
            }
            let w_norm = l2(&w);
            hess[j + 1][j] = w_norm;
            for i in 0..j {
                let (hi, hi1) = (hess[i][j], hess[i + 1][j]);
                hess[i][j] = cos[i] * hi + sin[i] * hi1;
                hess[i + 1][j] = -sin[i] * hi + cos[i] * hi1;
            }
            let r = hess[j][j].hypot(hess[j + 1][j]);
            if r == 0.0 {
                // Dead column (zero operator on the current direction):
                // drop it rather than divide by a vanished pivot.
                steps = j;
                break;
            }
            cos[j] = hess[j][j] / r;
            sin[j] = hess[j + 1][j] / r;
            hess[j][j] = r;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sin[j] * g[j];
            g[j] *= cos[j];
            let estimate = g[j + 1].abs() / rhs_norm;
            stats.residual_history.push(estimate);
            // Lucky breakdown: the Krylov space became invariant and the
            // least squares solution is exact.
            if w_norm == 0.0 || estimate < tolerance {
                break;
            }
            if j + 1 < restart {
                basis.push(w.iter().map(|v| v / w_norm).collect());
            }
        }

        // Back-substitute R y = g and update the iterate.
        let mut y = vec![0.0_f64; steps];
        for row in (0..steps).rev() {
            let mut acc = g[row];
            for col in row + 1..steps {
                acc -= hess[row][col] * y[col];
            }
            y[row] = acc / hess[row][row];
        }
        for (col, yk) in y.iter().enumerate() {
            for (xv, bv) in x.iter_mut().zip(basis[col].iter()) {
                *xv += yk * bv;
            }
        }
    }

    // One final true-residual check after running out of restarts.
    let applied = operator(&x)?;
    stats.operator_applications += 1;
    let residual: Vec<f64> = rhs.iter().zip(applied).map(|(b, k)| b - k).collect();
    let rel = l2(&residual) / rhs_norm;
    stats.residual_history.push(rel);
    if rel < tolerance {
        Ok((x, stats))
    } else {
        Err(Error::NoConvergence {
            iterations: stats.operator_applications,
            residual: rel.max(last_rel),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{dense_solve_oracle, pseudo_random};

    #[test]
    fn gmres_identity_converges_in_one_step() {
        let rhs = vec![1.0, -2.0, 3.0];
        let (x, stats) = gmres_solve(|v: &[f64]| Ok(v.to_vec()), &rhs, 10, 1e-12, 5).unwrap();
        assert_eq!(stats.inner_iterations, 1);
        for (a, b) in x.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(*stats.residual_history.last().unwrap() < 1e-12);
    }

    #[test]
    fn gmres_two_eigenvalues_need_two_steps() {
        let diag = [1.0, 2.0, 1.0, 2.0, 2.0, 1.0];
        let rhs: Vec<f64> = (0..6).map(|i| (i as f64 * 1.3).sin() + 2.0).collect();
        let (x, stats) = gmres_solve(
            |v: &[f64]| Ok(v.iter().zip(diag.iter()).map(|(a, d)| a * d).collect()),
            &rhs,
            2,
            1e-12,
            3,
        )
        .unwrap();
        assert!(stats.inner_iterations <= 2, "took {}", stats.inner_iterations);
        for i in 0..6 {
            assert!((x[i] * diag[i] - rhs[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn gmres_matches_dense_oracle_on_random_operator() {
        let n = 50;
        let mut seed = 0xfeed_u64;
        // Well conditioned: dominant diagonal plus small random coupling.
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 0.2 * pseudo_random(&mut seed);
            }
            a[i * n + i] += 4.0;
        }
        let rhs: Vec<f64> = (0..n).map(|_| pseudo_random(&mut seed)).collect();
        let a2 = a.clone();
        let (x, stats) = gmres_solve(
            move |v: &[f64]| {
                Ok((0..n)
                    .map(|i| (0..n).map(|j| a2[i * n + j] * v[j]).sum())
                    .collect())
            },
            &rhs,
            10,
            1e-10,
            50,
        )
        .unwrap();
        let want = dense_solve_oracle(&a, &rhs, n);
        let norm = want.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (g, w) in x.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-8 * norm.max(1.0));
        }
        assert!(stats.outer_iterations >= 1);
    }

    #[test]
    fn gmres_inner_residuals_non_increasing() {
        let n = 40;
        let mut seed = 99_u64;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 0.3 * pseudo_random(&mut seed);
            }
            a[i * n + i] += 3.0;
        }
        let rhs: Vec<f64> = (0..n).map(|_| pseudo_random(&mut seed)).collect();
        let (_, stats) = gmres_solve(
            |v: &[f64]| {
                Ok((0..n)
                    .map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum())
                    .collect())
            },
            &rhs,
            8,
            1e-10,
            50,
        )
        .unwrap();
        let mut prev = f64::INFINITY;
        for &r in &stats.residual_history {
            // Restart boundaries may repeat the previous value but never
            // exceed it beyond roundoff.
            assert!(r <= prev * (1.0 + 1e-12) + 1e-15, "{r} after {prev}");
            prev = r;
        }
    }

    #[test]
    fn richardson_zero_rhs_converges_immediately() {
        let (x, stats) =
            richardson_solve(|v: &[f64]| Ok(v.to_vec()), &[0.0, 0.0], 0.8, 1e-10, 10).unwrap();
        assert_eq!(stats.operator_applications, 0);
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn richardson_identity_with_unit_gamma() {
        let rhs = vec![2.0, -1.0, 0.5];
        let (x, stats) =
            richardson_solve(|v: &[f64]| Ok(v.to_vec()), &rhs, 1.0, 1e-12, 10).unwrap();
        assert_eq!(stats.inner_iterations, 1);
        for (a, b) in x.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn richardson_reports_no_convergence() {
        // Operator 3I with gamma 1 diverges: the residual grows each sweep.
        let rhs = vec![1.0];
        let err = richardson_solve(
            |v: &[f64]| Ok(v.iter().map(|a| 3.0 * a).collect()),
            &rhs,
            1.0,
            1e-10,
            20,
        );
        assert!(matches!(err, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn gmres_zero_operator_fails_without_poisoning() {
        let rhs = vec![1.0, 2.0];
        let out = gmres_solve(|v: &[f64]| Ok(vec![0.0; v.len()]), &rhs, 4, 1e-10, 2);
        match out {
            Err(Error::NoConvergence { residual, .. }) => {
                assert!(residual.is_finite(), "residual poisoned: {residual}")
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn gmres_reports_no_convergence_when_capped() {
        let n = 30;
        let mut seed = 5_u64;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = pseudo_random(&mut seed);
            }
            a[i * n + i] += 0.05;
        }
        let rhs: Vec<f64> = (0..n).map(|_| pseudo_random(&mut seed)).collect();
        let out = gmres_solve(
            |v: &[f64]| {
                Ok((0..n)
                    .map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum())
                    .collect())
            },
            &rhs,
            2,
            1e-14,
            1,
        );
        assert!(matches!(out, Err(Error::NoConvergence { .. })));
    }
}
