//! Uniform Cartesian grid over the bounding box, node classification against
//! the boundary curve, and location of all curve/grid-line intersections.

use std::collections::HashMap;

use crate::geometry::{ParametricBoundary, Side, Vec2};
use crate::{Error, Result};

/// Uniform grid on the box `[x_lo, x_hi] x [y_lo, y_hi]` with `(I+1) x (J+1)`
/// nodes and equal spacing `h` in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid {
    pub x_lo: f64,
    pub y_lo: f64,
    pub h: f64,
    /// Cell count along x; nodes are indexed `0..=I`.
    pub i_count: usize,
    /// Cell count along y; nodes are indexed `0..=J`.
    pub j_count: usize,
}

/// Build the grid, requiring isotropic spacing to within 1e-12 relative.
pub fn build_grid(box_lo: Vec2, box_hi: Vec2, i_count: usize, j_count: usize) -> Result<CartesianGrid> {
    if !(box_hi.x > box_lo.x && box_hi.y > box_lo.y) {
        return Err(Error::InvalidParameter(format!(
            "empty box ({}, {}) x ({}, {})",
            box_lo.x, box_hi.x, box_lo.y, box_hi.y
        )));
    }
    if i_count == 0 || j_count == 0 {
        return Err(Error::InvalidParameter("grid needs at least one cell per direction".into()));
    }
    let hx = (box_hi.x - box_lo.x) / i_count as f64;
    let hy = (box_hi.y - box_lo.y) / j_count as f64;
    if (hx - hy).abs() > 1e-12 * hx.max(hy) {
        return Err(Error::AnisotropicSpacing { hx, hy });
    }
    Ok(CartesianGrid {
        x_lo: box_lo.x,
        y_lo: box_lo.y,
        h: hx,
        i_count,
        j_count,
    })
}

impl CartesianGrid {
    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_lo + j as f64 * self.h
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.x(i), self.y(j))
    }

    pub fn x_hi(&self) -> f64 {
        self.x(self.i_count)
    }

    pub fn y_hi(&self) -> f64 {
        self.y(self.j_count)
    }

    /// Node count along x.
    pub fn nx(&self) -> usize {
        self.i_count + 1
    }

    /// Node count along y.
    pub fn ny(&self) -> usize {
        self.j_count + 1
    }

    pub fn node_count(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn is_box_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.i_count || j == self.j_count
    }
}

/// Read access to node-centered values, implemented by the global field and
/// by slab-local fields with ghost columns.
pub trait NodeValues {
    fn value_at(&self, i: usize, j: usize) -> f64;
}

/// Node-centered scalar field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl NodeValues for GridField {
    #[inline]
    fn value_at(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

impl GridField {
    pub fn zeros(grid: &CartesianGrid) -> Self {
        Self {
            nx: grid.nx(),
            ny: grid.ny(),
            data: vec![0.0; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &CartesianGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for j in 0..field.ny {
            for i in 0..field.nx {
                let v = f(grid.x(i), grid.y(j));
                field.set(i, j, v);
            }
        }
        field
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nx + i] += v;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Per-node side and irregularity flags.
#[derive(Debug, Clone)]
pub struct NodeClassification {
    nx: usize,
    sides: Vec<Side>,
    irregular: Vec<bool>,
    interior_count: usize,
}

impl NodeClassification {
    #[inline]
    pub fn side(&self, i: usize, j: usize) -> Side {
        self.sides[j * self.nx + i]
    }

    #[inline]
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        self.side(i, j) == Side::Interior
    }

    #[inline]
    pub fn is_irregular(&self, i: usize, j: usize) -> bool {
        self.irregular[j * self.nx + i]
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub fn irregular_count(&self) -> usize {
        self.irregular.iter().filter(|&&b| b).count()
    }
}

/// Classify every node as interior/exterior and flag irregular nodes (those
/// with an axis neighbor on the other side of the curve).
///
/// Fails if the curve leaves the box; warns if it comes within `2h` of the
/// box boundary.
pub fn classify_nodes(
    grid: &CartesianGrid,
    boundary: &ParametricBoundary,
) -> Result<NodeClassification> {
    let samples = 4096;
    let mut min_clearance = f64::INFINITY;
    for k in 0..samples {
        let p = boundary.position(k as f64 / samples as f64);
        let clearance = (p.x - grid.x_lo)
            .min(grid.x_hi() - p.x)
            .min(p.y - grid.y_lo)
            .min(grid.y_hi() - p.y);
        if clearance < 0.0 {
            return Err(Error::BoundaryEscapesBox { x: p.x, y: p.y });
        }
        min_clearance = min_clearance.min(clearance);
    }
    if min_clearance < 2.0 * grid.h {
        log::warn!(
            "boundary comes within {min_clearance:.3e} of the box edge (< 2h = {:.3e}); \
             corrections and stencils may degrade",
            2.0 * grid.h
        );
    }

    let nx = grid.nx();
    let ny = grid.ny();
    let mut sides = Vec::with_capacity(nx * ny);
    let mut interior_count = 0;
    for j in 0..ny {
        for i in 0..nx {
            let side = boundary.side_of(grid.node(i, j));
            if side == Side::Interior {
                interior_count += 1;
            }
            sides.push(side);
        }
    }

    let mut irregular = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let here = sides[j * nx + i];
            let mut flag = false;
            if i > 0 && sides[j * nx + i - 1] != here {
                flag = true;
            }
            if i + 1 < nx && sides[j * nx + i + 1] != here {
                flag = true;
            }
            if j > 0 && sides[(j - 1) * nx + i] != here {
                flag = true;
            }
            if j + 1 < ny && sides[(j + 1) * nx + i] != here {
                flag = true;
            }
            irregular[j * nx + i] = flag;
        }
    }

    Ok(NodeClassification {
        nx,
        sides,
        irregular,
        interior_count,
    })
}

/// Orientation of a crossed grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeOrientation {
    /// Edge between nodes `(i, j)` and `(i + 1, j)`.
    XEdge,
    /// Edge between nodes `(i, j)` and `(i, j + 1)`.
    YEdge,
}

/// One curve/edge crossing.
#[derive(Debug, Clone, Copy)]
pub struct Intersection {
    pub orientation: EdgeOrientation,
    /// Low-end node of the crossed edge.
    pub i: usize,
    pub j: usize,
    /// Crossing position.
    pub point: Vec2,
    /// Arc-length parameter of the crossing on the boundary.
    pub s: f64,
}

/// All curve/grid-line intersections, with lookup by edge.
#[derive(Debug, Clone)]
pub struct IntersectionSet {
    items: Vec<Intersection>,
    by_edge: HashMap<(EdgeOrientation, usize, usize), usize>,
}

impl IntersectionSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Intersection> {
        self.items.iter()
    }

    /// Intersection on the given edge, if any.
    pub fn on_edge(&self, orientation: EdgeOrientation, i: usize, j: usize) -> Option<&Intersection> {
        self.by_edge.get(&(orientation, i, j)).map(|&k| &self.items[k])
    }

    /// Index into the intersection list for the given edge, if crossed.
    pub fn index_on_edge(&self, orientation: EdgeOrientation, i: usize, j: usize) -> Option<usize> {
        self.by_edge.get(&(orientation, i, j)).copied()
    }

    pub fn get(&self, index: usize) -> &Intersection {
        &self.items[index]
    }
}

/// Find the crossing on every sign-changing grid edge by bisection on the
/// radial defect, and recover the boundary arc-length parameter by radial
/// projection. Also rejects under-resolved geometry where the curve crosses
/// an edge whose endpoints are on the same side.
pub fn find_intersections(
    grid: &CartesianGrid,
    classification: &NodeClassification,
    boundary: &ParametricBoundary,
) -> Result<IntersectionSet> {
    let mut items = Vec::new();
    let mut by_edge = HashMap::new();

    let mut record = |orientation: EdgeOrientation, i: usize, j: usize, point: Vec2| {
        let t = boundary.parameter_of_point(point);
        let s = boundary.arc_length_at(t);
        by_edge.insert((orientation, i, j), items.len());
        items.push(Intersection {
            orientation,
            i,
            j,
            point,
            s,
        });
    };

    // x-edges: (i, j) -- (i+1, j)
    for j in 0..=grid.j_count {
        for i in 0..grid.i_count {
            let a = grid.node(i, j);
            let b = grid.node(i + 1, j);
            let sa = classification.side(i, j);
            let sb = classification.side(i + 1, j);
            if sa != sb {
                let point = bisect_edge(boundary, a, b, grid.h, i, j)?;
                record(EdgeOrientation::XEdge, i, j, point);
            } else {
                check_resolved(boundary, a, b, sa)?;
            }
        }
    }
    // y-edges: (i, j) -- (i, j+1)
    for j in 0..grid.j_count {
        for i in 0..=grid.i_count {
            let a = grid.node(i, j);
            let b = grid.node(i, j + 1);
            let sa = classification.side(i, j);
            let sb = classification.side(i, j + 1);
            if sa != sb {
                let point = bisect_edge(boundary, a, b, grid.h, i, j)?;
                record(EdgeOrientation::YEdge, i, j, point);
            } else {
                check_resolved(boundary, a, b, sa)?;
            }
        }
    }

    Ok(IntersectionSet { items, by_edge })
}

/// Bisection for the curve crossing on the segment `[a, b]`, to 1e-12 h.
/// The crossing is nudged off the endpoints so divided differences stay
/// finite when a node lies exactly on the curve.
fn bisect_edge(
    boundary: &ParametricBoundary,
    a: Vec2,
    b: Vec2,
    h: f64,
    i: usize,
    j: usize,
) -> Result<Vec2> {
    let fa = boundary.signed_radial_distance(a);
    let fb = boundary.signed_radial_distance(b);
    // Interior tie rule: the "negative" side includes zero.
    let neg = |f: f64| f <= 0.0;
    if neg(fa) == neg(fb) {
        return Err(Error::RootNotFound { i, j });
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let f_lo_neg = neg(fa);
    let eval = |t: f64| Vec2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if neg(boundary.signed_radial_distance(eval(mid))) == f_lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (0.5 * (lo + hi)).clamp(1e-12, 1.0 - 1e-12);
    let _ = h;
    Ok(eval(t))
}

/// Same-side edge: make sure the curve does not cross it twice (thin
/// feature). A midpoint on the other side is a sure sign of under-resolution.
fn check_resolved(boundary: &ParametricBoundary, a: Vec2, b: Vec2, side: Side) -> Result<()> {
    let mid = Vec2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    if boundary.side_of(mid) != side {
        return Err(Error::UnresolvedBoundary { x: mid.x, y: mid.y });
    }
    Ok(())
}
