use thiserror::Error;

/// Errors produced by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A geometry or solver parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Boundary discretization produced fewer control points than required.
    #[error("boundary discretization too coarse: {0} control points, need at least 8")]
    TooCoarse(usize),

    /// Grid spacings differ between the x and y directions.
    #[error("grid spacing differs between directions: hx = {hx:e}, hy = {hy:e}")]
    AnisotropicSpacing { hx: f64, hy: f64 },

    /// The boundary curve leaves the bounding box.
    #[error("boundary curve leaves the bounding box at ({x}, {y})")]
    BoundaryEscapesBox { x: f64, y: f64 },

    /// A sign-changing grid edge yielded no bracketed root.
    #[error("no bracketed root on sign-changing edge at node ({i}, {j})")]
    RootNotFound { i: usize, j: usize },

    /// The grid is too coarse to resolve a boundary feature.
    #[error("grid does not resolve the boundary near ({x}, {y}); refine the grid")]
    UnresolvedBoundary { x: f64, y: f64 },

    /// A value vector does not match the control point count.
    #[error("value count {got} does not match control point count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    /// A dense linear system encountered a zero pivot.
    #[error("singular linear system in {0}")]
    SingularSystem(&'static str),

    /// The Thomas algorithm encountered a vanishing pivot.
    #[error("tridiagonal pivot vanished at row {0}")]
    ZeroPivot(usize),

    /// A sine transform was requested with no interior modes.
    #[error("transform needs at least one interior mode")]
    EmptyTransform,

    /// A tridiagonal system is too small for the requested block count.
    #[error("system of size {n} cannot be split into {m} blocks (need n >= 3m - 1)")]
    PartitionTooSmall { n: usize, m: usize },

    /// An interpolation stencil would reach outside the grid.
    #[error("interpolation stencil at ({x}, {y}) reaches outside the grid")]
    NearBox { x: f64, y: f64 },

    /// An interpolation stencil stayed ill-conditioned after reselection.
    #[error("interpolation stencil at ({x}, {y}) is singular after reselection")]
    SingularStencil { x: f64, y: f64 },

    /// Density iteration failed to reach the tolerance.
    #[error("iteration did not converge: relative residual {residual:e} after {iterations} operator applications")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Slab decomposition would give a worker fewer than 4 columns.
    #[error("cannot split {columns} grid columns over {workers} workers (each slab needs >= 4 columns)")]
    SlabTooSmall { workers: usize, columns: usize },

    /// A time-stepped field exceeded the blow-up guard.
    #[error("field value exceeded {limit:e} during time stepping")]
    BlowUp { limit: f64 },

    /// Pure Neumann Laplace problems have a nullspace and are rejected.
    #[error("Neumann problem with kappa = 0 is not supported: the solution is defined only up to a constant")]
    NeumannNullspace,

    /// File input/output failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
