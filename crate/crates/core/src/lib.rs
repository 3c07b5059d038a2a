//! Kernel-free boundary integral (KFBI) solver for elliptic boundary value
//! problems on irregular 2D domains embedded in a Cartesian grid.
//!
//! The library solves Laplace and modified Helmholtz equations
//! `Δu − κu = f` on a smooth closed domain `Ω` with Dirichlet or Neumann
//! boundary data. Instead of quadrature against an explicit Green's function,
//! boundary and volume potentials are evaluated by solving equivalent
//! interface problems on a uniform grid over a bounding box: the right-hand
//! side is corrected at irregular nodes from the jump conditions, the
//! corrected system is solved with a sine-transform fast solver, and one-sided
//! boundary values are extracted with a jump-aware six-point stencil. The
//! boundary integral equation of the second kind is then solved by restarted
//! GMRES or Richardson iteration on the boundary density.
//!
//! ```
//! use std::sync::Arc;
//! use kfbi::bie::{BoundaryCondition, BvpSpec, KfbiSolver, SolverOptions};
//! use kfbi::geometry::{build_boundary, CurveKind, Vec2};
//! use kfbi::grid::build_grid;
//!
//! // Laplace equation on the unit disk with boundary data from a harmonic
//! // function; the solver reports the error against it.
//! let exact = |x: f64, y: f64| x.exp() * y.cos();
//! let spec = BvpSpec {
//!     kappa: 0.0,
//!     boundary_condition: BoundaryCondition::Dirichlet(Arc::new(exact)),
//!     source: None,
//!     boundary: build_boundary(CurveKind::Circle { radius: 1.0 }, Vec2::new(0.0, 0.0))?,
//!     grid: build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 64, 64)?,
//!     control_spacing: None,
//!     options: SolverOptions::default(),
//! };
//! let solver = KfbiSolver::new(spec)?;
//! let solution = solver.solve()?;
//! let (_, max_error) = solver.error_norms(&solution.field, exact);
//! assert!(max_error < 1e-3);
//! # Ok::<(), kfbi::Error>(())
//! ```
//!
//! Module layout mirrors the pipeline:
//! - [`geometry`]: parametric boundary curves and control points,
//! - [`grid`]: Cartesian grid, node classification, boundary intersections,
//! - [`jumps`]: boundary densities and jump conditions across the interface,
//! - [`correction`]: corrected right-hand sides at irregular nodes,
//! - [`fast_poisson`]: sine-transform + tridiagonal interface solver,
//! - [`arrowhead`]: partitioned tridiagonal solves via Schur complements,
//! - [`interpolation`]: one-sided boundary value extraction,
//! - [`bie`]: density iteration and full boundary value problem solves,
//! - [`partition`]: slab-decomposed multi-worker solves,
//! - [`timestepper`]: Gray-Scott reaction-diffusion demo.

pub mod arrowhead;
pub mod bie;
pub mod correction;
mod error;
pub mod fast_poisson;
pub mod geometry;
pub mod grid;
pub mod interpolation;
pub mod jumps;
mod linalg;
pub mod partition;
#[cfg(test)]
pub(crate) mod test_support;
pub mod timestepper;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
