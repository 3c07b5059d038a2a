//! Corrected right-hand side of the five-point discretization of the
//! interface problem.
//!
//! The scheme is
//! `(v_{i+1,j} + v_{i-1,j} + v_{i,j+1} + v_{i,j-1} - 4 v_{i,j}) / h^2 - kappa v_{i,j} = f_{i,j}`.
//! At an irregular node one stencil leg reaches across the boundary, so the
//! neighbor value belongs to the other smooth branch of the interface
//! solution. Adding the degree-2 Taylor polynomial of the prescribed jumps at
//! the crossing restores first-order local consistency: for a crossing at
//! `xi` on the edge to the node across the interface at axis offset
//! `d = (coordinate of that node) - xi`, the correction is
//! `-P(d)/h^2` on the interior endpoint and `+P(d)/h^2` on the exterior one,
//! with `P(d) = [v] + [v_a] d + [v_aa] d^2 / 2` along the edge axis `a`.

use crate::geometry::ParametricBoundary;
use crate::grid::{CartesianGrid, EdgeOrientation, GridField, IntersectionSet, NodeClassification};
use crate::jumps::{jumps_at, InterfaceSpec, JumpData};
use crate::Result;

/// Corrected right-hand side plus per-node bookkeeping of the added terms.
#[derive(Debug, Clone)]
pub struct CorrectedRhs {
    pub field: GridField,
    /// `(i, j, added value)` for every nonzero correction contribution, one
    /// entry per crossed edge incident to the node.
    pub contributions: Vec<(usize, usize, f64)>,
}

/// The base (uncorrected) right-hand side: the zero-extended source for
/// volume problems, all zeros for pure layer problems.
pub fn base_rhs(
    spec: &InterfaceSpec,
    grid: &CartesianGrid,
    classification: &NodeClassification,
) -> GridField {
    let mut field = GridField::zeros(grid);
    if let Some(source) = &spec.source {
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if classification.is_interior(i, j) {
                    field.set(i, j, source.at_node(grid, i, j));
                }
            }
        }
    }
    field
}

/// Jumps of the interface solution evaluated at every intersection, in
/// intersection order.
pub fn intersection_jumps(
    spec: &InterfaceSpec,
    intersections: &IntersectionSet,
    boundary: &ParametricBoundary,
) -> Result<Vec<JumpData>> {
    intersections
        .iter()
        .map(|q| {
            let frame = boundary.frame_at(q.s);
            jumps_at(spec, boundary, &frame, q.s)
        })
        .collect()
}

/// Add the jump corrections to the base right-hand side.
///
/// Each node owns its corrections: the loop visits every irregular node and
/// accumulates one term per crossed incident edge, in fixed edge order, so
/// the result does not depend on how nodes are distributed over workers.
pub fn correct_rhs(
    base: &GridField,
    spec: &InterfaceSpec,
    grid: &CartesianGrid,
    classification: &NodeClassification,
    intersections: &IntersectionSet,
    boundary: &ParametricBoundary,
) -> Result<CorrectedRhs> {
    let jumps = intersection_jumps(spec, intersections, boundary)?;
    let mut corrected = CorrectedRhs {
        field: base.clone(),
        contributions: Vec::new(),
    };
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            if classification.is_irregular(i, j) && !grid.is_box_boundary(i, j) {
                accumulate_node(
                    &mut corrected,
                    grid,
                    classification,
                    intersections,
                    &jumps,
                    i,
                    j,
                );
            }
        }
    }
    Ok(corrected)
}

/// Corrections for a single node, iterating its own (up to four) edges.
/// Exposed so slab workers can correct exactly the nodes they own.
pub fn accumulate_node(
    corrected: &mut CorrectedRhs,
    grid: &CartesianGrid,
    classification: &NodeClassification,
    intersections: &IntersectionSet,
    jumps: &[JumpData],
    i: usize,
    j: usize,
) {
    let h = grid.h;
    let interior = classification.is_interior(i, j);
    let sign = if interior { -1.0 } else { 1.0 };

    let mut apply = |taylor: f64| {
        let value = sign * taylor / (h * h);
        corrected.field.add(i, j, value);
        corrected.contributions.push((i, j, value));
    };

    // Left x-edge: crossing between (i-1, j) and (i, j); the node across the
    // interface is (i-1, j).
    if i > 0 {
        if let Some(k) = intersections.index_on_edge(EdgeOrientation::XEdge, i - 1, j) {
            let q = intersections.get(k);
            let d = grid.x(i - 1) - q.point.x;
            let jd = &jumps[k];
            apply(jd.v + jd.vx * d + 0.5 * jd.vxx * d * d);
        }
    }
    // Right x-edge: crossing between (i, j) and (i+1, j).
    if i < grid.i_count {
        if let Some(k) = intersections.index_on_edge(EdgeOrientation::XEdge, i, j) {
            let q = intersections.get(k);
            let d = grid.x(i + 1) - q.point.x;
            let jd = &jumps[k];
            apply(jd.v + jd.vx * d + 0.5 * jd.vxx * d * d);
        }
    }
    // Lower y-edge.
    if j > 0 {
        if let Some(k) = intersections.index_on_edge(EdgeOrientation::YEdge, i, j - 1) {
            let q = intersections.get(k);
            let d = grid.y(j - 1) - q.point.y;
            let jd = &jumps[k];
            apply(jd.v + jd.vy * d + 0.5 * jd.vyy * d * d);
        }
    }
    // Upper y-edge.
    if j < grid.j_count {
        if let Some(k) = intersections.index_on_edge(EdgeOrientation::YEdge, i, j) {
            let q = intersections.get(k);
            let d = grid.y(j + 1) - q.point.y;
            let jd = &jumps[k];
            apply(jd.v + jd.vy * d + 0.5 * jd.vyy * d * d);
        }
    }
}
