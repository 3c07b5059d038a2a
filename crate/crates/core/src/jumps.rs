//! Boundary density functions and the jump conditions of the interface
//! solution.
//!
//! An interface problem prescribes the jump of the solution `[v] = Phi` and
//! of its normal derivative `[dv/dn] = Psi` across the boundary, together
//! with a possible jump `[F]` of the right-hand side. Differentiating the
//! prescribed jumps along arc length and using the PDE trace yields all six
//! Cartesian jumps `[v], [v_x], [v_y], [v_xx], [v_xy], [v_yy]`, which drive
//! both the finite-difference correction and the one-sided interpolation.

use std::sync::Arc;

use crate::geometry::{BoundaryFrame, ControlPointSet, ParametricBoundary};
use crate::grid::{CartesianGrid, GridField};
use crate::linalg::{solve_cyclic_tridiagonal, DenseLu};
use crate::{Error, Result};

/// Periodic interpolant of a boundary density over arc length, with first and
/// second derivatives. Backed by a periodic cubic spline: its second
/// derivatives are accurate enough to keep the overall scheme second order
/// and it tolerates rough iterates during the density iteration.
#[derive(Debug, Clone)]
pub struct DensityField {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Spline second derivatives at the knots.
    moments: Vec<f64>,
    period: f64,
}

/// Fit a periodic cubic spline through the control point values.
pub fn fit_density(points: &ControlPointSet, values: &[f64]) -> Result<DensityField> {
    if values.len() != points.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    DensityField::new(points.arc_lengths(), values.to_vec(), points.perimeter())
}

impl DensityField {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, period: f64) -> Result<Self> {
        let m = knots.len();
        if m < 3 {
            return Err(Error::InvalidParameter(
                "density interpolation needs at least 3 points".into(),
            ));
        }
        if values.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                got: values.len(),
            });
        }
        // Interval widths h_i = s_{i+1} - s_i, wrapping the last one.
        let mut widths = Vec::with_capacity(m);
        for i in 0..m {
            let next = if i + 1 == m { knots[0] + period } else { knots[i + 1] };
            let w = next - knots[i];
            if !(w > 0.0) {
                return Err(Error::InvalidParameter(
                    "density knots must be strictly increasing".into(),
                ));
            }
            widths.push(w);
        }
        // Cyclic tridiagonal system for the spline moments: continuity of the
        // first derivative at every knot.
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let prev = (i + m - 1) % m;
            let next = (i + 1) % m;
            let h_prev = widths[prev];
            let h_here = widths[i];
            sub[i] = h_prev / 6.0;
            diag[i] = (h_prev + h_here) / 3.0;
            sup[i] = h_here / 6.0;
            rhs[i] = (values[next] - values[i]) / h_here - (values[i] - values[prev]) / h_prev;
        }
        let moments = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs)?;
        Ok(Self {
            knots,
            values,
            moments,
            period,
        })
    }

    fn locate(&self, s: f64) -> (usize, f64, f64, f64) {
        let m = self.knots.len();
        let s = (s - self.knots[0]).rem_euclid(self.period) + self.knots[0];
        let mut lo = 0;
        let mut hi = m;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let next = if lo + 1 == m { self.knots[0] + self.period } else { self.knots[lo + 1] };
        (lo, s - self.knots[lo], next - s, next - self.knots[lo])
    }

    /// Density value at arc length `s`.
    pub fn value(&self, s: f64) -> f64 {
        let (i, dl, dr, h) = self.locate(s);
        let j = (i + 1) % self.knots.len();
        let (mi, mj) = (self.moments[i], self.moments[j]);
        mi * dr * dr * dr / (6.0 * h)
            + mj * dl * dl * dl / (6.0 * h)
            + (self.values[i] / h - mi * h / 6.0) * dr
            + (self.values[j] / h - mj * h / 6.0) * dl
    }

    /// First derivative with respect to arc length.
    pub fn derivative(&self, s: f64) -> f64 {
        let (i, dl, dr, h) = self.locate(s);
        let j = (i + 1) % self.knots.len();
        let (mi, mj) = (self.moments[i], self.moments[j]);
        -mi * dr * dr / (2.0 * h)
            + mj * dl * dl / (2.0 * h)
            + (self.values[j] - self.values[i]) / h
            - (mj - mi) * h / 6.0
    }

    /// Second derivative with respect to arc length.
    pub fn second_derivative(&self, s: f64) -> f64 {
        let (i, dl, dr, h) = self.locate(s);
        let j = (i + 1) % self.knots.len();
        (self.moments[i] * dr + self.moments[j] * dl) / h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The six Cartesian jumps of the interface solution at a boundary point.
#[derive(Debug, Clone, Copy, Default)]
pub struct JumpData {
    pub v: f64,
    pub vx: f64,
    pub vy: f64,
    pub vxx: f64,
    pub vxy: f64,
    pub vyy: f64,
}

/// Source term of an interface problem: either a closure over coordinates or
/// values sampled on the grid with a boundary trace spline (used by time
/// stepping, where the source is the previous discrete state). A constant
/// offset can be attached without touching the inner representation.
#[derive(Clone)]
pub enum SourceTerm {
    Analytic(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    Sampled {
        /// Values at grid nodes; only interior nodes are used.
        nodes: Arc<GridField>,
        /// One-sided interior trace of the source along the boundary.
        trace: Arc<DensityField>,
    },
    Shifted {
        inner: Option<Box<SourceTerm>>,
        offset: f64,
    },
}

impl std::fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceTerm::Analytic(_) => f.write_str("SourceTerm::Analytic"),
            SourceTerm::Sampled { .. } => f.write_str("SourceTerm::Sampled"),
            SourceTerm::Shifted { offset, .. } => {
                write!(f, "SourceTerm::Shifted({offset})")
            }
        }
    }
}

impl SourceTerm {
    pub fn analytic(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        SourceTerm::Analytic(Arc::new(f))
    }

    /// Attach a constant offset to an optional source. `None` with a zero
    /// offset stays `None`.
    pub fn shifted(inner: Option<SourceTerm>, offset: f64) -> Option<SourceTerm> {
        if offset == 0.0 {
            inner
        } else {
            Some(SourceTerm::Shifted {
                inner: inner.map(Box::new),
                offset,
            })
        }
    }

    /// Source value at a grid node.
    pub fn at_node(&self, grid: &CartesianGrid, i: usize, j: usize) -> f64 {
        match self {
            SourceTerm::Analytic(f) => f(grid.x(i), grid.y(j)),
            SourceTerm::Sampled { nodes, .. } => nodes.get(i, j),
            SourceTerm::Shifted { inner, offset } => {
                offset + inner.as_ref().map_or(0.0, |s| s.at_node(grid, i, j))
            }
        }
    }

    /// Interior-limit trace on the boundary at arc length `s`.
    pub fn trace(&self, boundary: &ParametricBoundary, s: f64) -> f64 {
        match self {
            SourceTerm::Analytic(f) => {
                let p = boundary.frame_at(s).point;
                f(p.x, p.y)
            }
            SourceTerm::Sampled { trace, .. } => trace.value(s),
            SourceTerm::Shifted { inner, offset } => {
                offset + inner.as_ref().map_or(0.0, |s_inner| s_inner.trace(boundary, s))
            }
        }
    }
}

/// Which canonical interface problem a spec represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceCase {
    /// `[v] = phi`, zero right-hand side: a double layer potential.
    DoubleLayer,
    /// `[dv/dn] = psi`, zero right-hand side: the negative single layer.
    SingleLayer,
    /// Zero jumps, zero-extended source: a volume potential.
    Volume,
    /// Density jump plus volume source, used for the final solution assembly.
    Combined,
}

/// Data of one interface problem: jump densities, source and kappa.
#[derive(Debug, Clone)]
pub struct InterfaceSpec {
    pub case: InterfaceCase,
    pub phi: Option<DensityField>,
    pub psi: Option<DensityField>,
    pub source: Option<SourceTerm>,
    pub kappa: f64,
}

impl InterfaceSpec {
    pub fn double_layer(phi: DensityField, kappa: f64) -> Self {
        Self {
            case: InterfaceCase::DoubleLayer,
            phi: Some(phi),
            psi: None,
            source: None,
            kappa,
        }
    }

    pub fn single_layer(psi: DensityField, kappa: f64) -> Self {
        Self {
            case: InterfaceCase::SingleLayer,
            phi: None,
            psi: Some(psi),
            source: None,
            kappa,
        }
    }

    pub fn volume(source: SourceTerm, kappa: f64) -> Self {
        Self {
            case: InterfaceCase::Volume,
            phi: None,
            psi: None,
            source: Some(source),
            kappa,
        }
    }

    /// Attach a volume source to a layer spec (final assembly combines the
    /// converged density with the volume potential in a single solve).
    pub fn with_source(mut self, source: Option<SourceTerm>) -> Self {
        if source.is_some() {
            self.case = InterfaceCase::Combined;
        }
        self.source = source;
        self
    }

    fn phi_derivs(&self, s: f64) -> (f64, f64, f64) {
        match &self.phi {
            Some(d) => (d.value(s), d.derivative(s), d.second_derivative(s)),
            None => (0.0, 0.0, 0.0),
        }
    }

    fn psi_derivs(&self, s: f64) -> (f64, f64) {
        match &self.psi {
            Some(d) => (d.value(s), d.derivative(s)),
            None => (0.0, 0.0),
        }
    }

    /// Jump of the right-hand side across the boundary. The source is
    /// extended by zero outside the domain, so the jump is its interior trace.
    pub fn rhs_jump(&self, boundary: &ParametricBoundary, s: f64) -> f64 {
        match &self.source {
            Some(src) => src.trace(boundary, s),
            None => 0.0,
        }
    }
}

/// Assemble the six jumps at arc length `s`.
///
/// First-order jumps solve the 2x2 system given by the tangential derivative
/// of `[v] = Phi` and the prescribed normal jump `Psi`. Second-order jumps
/// solve the 3x3 system from differentiating those relations once more along
/// arc length and closing with the PDE trace
/// `[v_xx] + [v_yy] = [F] + kappa [v]`.
pub fn jumps_at(
    spec: &InterfaceSpec,
    boundary: &ParametricBoundary,
    frame: &BoundaryFrame,
    s: f64,
) -> Result<JumpData> {
    let (phi, phi_s, phi_ss) = spec.phi_derivs(s);
    let (psi, psi_s) = spec.psi_derivs(s);
    let f_jump = spec.rhs_jump(boundary, s);

    let t1 = frame.tangent.x;
    let t2 = frame.tangent.y;
    let kappa_curve = frame.curvature;

    // [[t1, t2], [t2, -t1]] is an involution, so the first-order solve is a
    // direct application of the same matrix.
    let vx = t1 * phi_s + t2 * psi;
    let vy = t2 * phi_s - t1 * psi;

    // d tangent / ds = curvature * (-t2, t1).
    let t1p = -kappa_curve * t2;
    let t2p = kappa_curve * t1;

    let a = vec![
        t1 * t1,
        2.0 * t1 * t2,
        t2 * t2,
        t1 * t2,
        t2 * t2 - t1 * t1,
        -t1 * t2,
        1.0,
        0.0,
        1.0,
    ];
    let b = [
        phi_ss - (t1p * vx + t2p * vy),
        psi_s - (t2p * vx - t1p * vy),
        f_jump + spec.kappa * phi,
    ];
    let lu = DenseLu::factor(a, 3, "second-order jump system")?;
    let second = lu.solve(&b);

    Ok(JumpData {
        v: phi,
        vx,
        vy,
        vxx: second[0],
        vxy: second[1],
        vyy: second[2],
    })
}
