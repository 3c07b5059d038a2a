//! One-sided extraction of boundary values and derivatives from the grid
//! solution.
//!
//! Around a control point `z` a six-node quadratic stencil is selected: the
//! P2 triangle pattern of the 3x3 node neighborhood of `z`'s cell, oriented
//! by the sub-cell quadrant of `z` (rotations/reflections of one reference
//! pattern). Stencil values on the exterior side are shifted by the jump
//! Taylor polynomial so all six equations describe the interior limit, and
//! the local 6x6 system in monomials `{1, x, y, x^2, xy, y^2}` is solved by
//! LU with partial pivoting.

use crate::geometry::{Side, Vec2};
use crate::grid::{CartesianGrid, NodeClassification, NodeValues};
use crate::jumps::JumpData;
use crate::linalg::DenseLu;
use crate::{Error, Result};

/// Offsets of the reference stencil: a right triangle of lattice points with
/// legs of two cells, unisolvent for quadratics.
const REFERENCE_OFFSETS: [(usize, usize); 6] = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)];

/// Reselect threshold for the scaled local system.
const CONDITION_LIMIT: f64 = 1e8;

/// A chosen six-node stencil for one evaluation point.
#[derive(Debug, Clone)]
pub struct StencilSelection {
    /// Grid indices of the six nodes.
    pub nodes: [(usize, usize); 6],
    /// Interior/exterior flag per node.
    pub sides: [Side; 6],
    /// Node position minus evaluation point.
    pub offsets: [Vec2; 6],
    /// Condition estimate of the scaled 6x6 system.
    pub condition: f64,
    /// Row-major scaled system matrix (offsets divided by h).
    matrix: Vec<f64>,
    h: f64,
}

/// Value and derivatives of the interior limit at the evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct OneSidedData {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    /// Second derivatives are exposed for diagnostics only.
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

/// Select the six-point stencil for the point `z`.
///
/// The 3x3 neighborhood corner is the cell corner diagonally opposite the
/// sub-cell quadrant of `z`, so the triangle legs run across the cell and
/// every node stays within `2h` of `z`. If the local system is
/// ill-conditioned the neighborhood is shifted one cell toward the side with
/// more interior nodes and reselected once.
pub fn select_stencil(
    grid: &CartesianGrid,
    classification: &NodeClassification,
    z: Vec2,
) -> Result<StencilSelection> {
    let (cell_i, cell_j, frac_x, frac_y) = locate_cell(grid, z)?;
    let orient_x: isize = if frac_x >= 0.5 { 1 } else { -1 };
    let orient_y: isize = if frac_y >= 0.5 { 1 } else { -1 };
    let corner_i = if orient_x > 0 { cell_i } else { cell_i + 1 };
    let corner_j = if orient_y > 0 { cell_j } else { cell_j + 1 };

    let first = build_selection(grid, classification, z, corner_i, corner_j, orient_x, orient_y)?;
    if first.condition < CONDITION_LIMIT {
        return Ok(first);
    }
    // Shift toward the interior side once, judged by the current node flags.
    let interior_votes: isize = first
        .sides
        .iter()
        .zip(first.offsets.iter())
        .filter(|(side, _)| **side == Side::Interior)
        .map(|(_, off)| if off.x >= 0.0 { 1 } else { -1 })
        .sum();
    let shift: isize = if interior_votes >= 0 { 1 } else { -1 };
    let shifted_i = corner_i as isize + shift;
    if shifted_i < 0 {
        return Err(Error::SingularStencil { x: z.x, y: z.y });
    }
    let second = build_selection(
        grid,
        classification,
        z,
        shifted_i as usize,
        corner_j,
        orient_x,
        orient_y,
    )?;
    if second.condition < CONDITION_LIMIT {
        Ok(second)
    } else {
        Err(Error::SingularStencil { x: z.x, y: z.y })
    }
}

fn locate_cell(grid: &CartesianGrid, z: Vec2) -> Result<(usize, usize, f64, f64)> {
    let fx = (z.x - grid.x_lo) / grid.h;
    let fy = (z.y - grid.y_lo) / grid.h;
    if fx < 0.0 || fy < 0.0 || fx > grid.i_count as f64 || fy > grid.j_count as f64 {
        return Err(Error::NearBox { x: z.x, y: z.y });
    }
    let cell_i = (fx as usize).min(grid.i_count - 1);
    let cell_j = (fy as usize).min(grid.j_count - 1);
    Ok((cell_i, cell_j, fx - cell_i as f64, fy - cell_j as f64))
}

fn build_selection(
    grid: &CartesianGrid,
    classification: &NodeClassification,
    z: Vec2,
    corner_i: usize,
    corner_j: usize,
    orient_x: isize,
    orient_y: isize,
) -> Result<StencilSelection> {
    let mut nodes = [(0usize, 0usize); 6];
    let mut sides = [Side::Exterior; 6];
    let mut offsets = [Vec2::default(); 6];
    for (slot, (a, b)) in REFERENCE_OFFSETS.iter().enumerate() {
        let ni = corner_i as isize + orient_x * *a as isize;
        let nj = corner_j as isize + orient_y * *b as isize;
        if ni < 0 || nj < 0 || ni > grid.i_count as isize || nj > grid.j_count as isize {
            return Err(Error::NearBox { x: z.x, y: z.y });
        }
        let (ni, nj) = (ni as usize, nj as usize);
        nodes[slot] = (ni, nj);
        sides[slot] = classification.side(ni, nj);
        offsets[slot] = grid.node(ni, nj) - z;
    }

    let h = grid.h;
    let mut matrix = vec![0.0; 36];
    for (row, off) in offsets.iter().enumerate() {
        let xi = off.x / h;
        let eta = off.y / h;
        matrix[row * 6] = 1.0;
        matrix[row * 6 + 1] = xi;
        matrix[row * 6 + 2] = eta;
        matrix[row * 6 + 3] = 0.5 * xi * xi;
        matrix[row * 6 + 4] = xi * eta;
        matrix[row * 6 + 5] = 0.5 * eta * eta;
    }
    let condition = match DenseLu::factor(matrix.clone(), 6, "interpolation stencil") {
        Ok(lu) => lu.condition_estimate(&matrix),
        Err(_) => f64::INFINITY,
    };
    Ok(StencilSelection {
        nodes,
        sides,
        offsets,
        condition,
        matrix,
        h,
    })
}

/// Interior-limit value and first derivatives at the stencil's evaluation
/// point. Exterior samples are shifted by the jump Taylor polynomial
/// `J = [v] + [v_x] x + [v_y] y + [v_xx] x^2/2 + [v_xy] xy + [v_yy] y^2/2`.
pub fn one_sided_value(
    field: &impl NodeValues,
    selection: &StencilSelection,
    jumps: &JumpData,
) -> Result<OneSidedData> {
    let mut rhs = [0.0; 6];
    for (slot, ((i, j), side)) in selection
        .nodes
        .iter()
        .zip(selection.sides.iter())
        .enumerate()
    {
        let mut v = field.value_at(*i, *j);
        if *side == Side::Exterior {
            let off = selection.offsets[slot];
            v += jumps.v
                + jumps.vx * off.x
                + jumps.vy * off.y
                + 0.5 * jumps.vxx * off.x * off.x
                + jumps.vxy * off.x * off.y
                + 0.5 * jumps.vyy * off.y * off.y;
        }
        rhs[slot] = v;
    }
    let lu = DenseLu::factor(selection.matrix.clone(), 6, "interpolation stencil")?;
    let scaled = lu.solve(&rhs);
    let h = selection.h;
    Ok(OneSidedData {
        value: scaled[0],
        dx: scaled[1] / h,
        dy: scaled[2] / h,
        dxx: scaled[3] / (h * h),
        dxy: scaled[4] / (h * h),
        dyy: scaled[5] / (h * h),
    })
}

/// Interior-limit normal derivative at the evaluation point.
pub fn one_sided_normal_derivative(
    field: &impl NodeValues,
    selection: &StencilSelection,
    jumps: &JumpData,
    normal: Vec2,
) -> Result<f64> {
    let data = one_sided_value(field, selection, jumps)?;
    Ok(normal.x * data.dx + normal.y * data.dy)
}
