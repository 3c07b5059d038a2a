//! Integration properties of the boundary integral driver: operator
//! linearity, fixed points at convergence, scheme agreement, one-sided jump
//! consistency of the converged field, and the partitioned-solve message
//! audit.

mod common;

use std::sync::Arc;

use kfbi::bie::{
    boundary_norm, BoundaryCondition, BvpSpec, ExtractionMode, IterationScheme, KfbiSolver,
    SolverOptions,
};
use kfbi::geometry::{build_boundary, CurveKind, ParametricBoundary, Side, Vec2};
use kfbi::grid::build_grid;
use kfbi::interpolation::{one_sided_value, select_stencil};
use kfbi::jumps::{fit_density, InterfaceSpec, JumpData, SourceTerm};
use kfbi::partition::MessageTag;
use kfbi::Error;

fn exp_trig(x: f64, y: f64) -> f64 {
    x.exp() * y.cos() + y.exp() * x.sin()
}

fn circle() -> ParametricBoundary {
    build_boundary(CurveKind::Circle { radius: 1.0 }, Vec2::new(0.0, 0.0)).unwrap()
}

fn dirichlet_solver(n: usize, scheme: IterationScheme, workers: usize) -> KfbiSolver {
    KfbiSolver::new(BvpSpec {
        kappa: 0.0,
        boundary_condition: BoundaryCondition::Dirichlet(Arc::new(exp_trig)),
        source: None,
        boundary: circle(),
        grid: build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), n, n).unwrap(),
        control_spacing: None,
        options: SolverOptions {
            scheme,
            workers,
            ..SolverOptions::default()
        },
    })
    .unwrap()
}

#[test]
fn operators_are_linear_and_vanish_on_zero() {
    let solver = dirichlet_solver(48, IterationScheme::Gmres, 1);
    let m = solver.control_points().len();
    let zero = solver.apply_kd(&vec![0.0; m]).unwrap();
    assert!(zero.iter().all(|v| v.abs() < 1e-14));

    let phi: Vec<f64> = (0..m).map(|k| (k as f64 * 0.37).sin()).collect();
    let once = solver.apply_kd(&phi).unwrap();
    let twice = solver.apply_kd(&phi.iter().map(|v| 2.0 * v).collect::<Vec<_>>()).unwrap();
    for (a, b) in twice.iter().zip(once.iter()) {
        assert!((a - 2.0 * b).abs() < 1e-10, "{a} vs 2x{b}");
    }

    // Neumann operator too.
    let nsolver = KfbiSolver::new(BvpSpec {
        kappa: 1.0,
        boundary_condition: BoundaryCondition::Neumann(Arc::new(|_, _| 0.0)),
        source: None,
        boundary: circle(),
        grid: build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 48, 48).unwrap(),
        control_spacing: None,
        options: SolverOptions::default(),
    })
    .unwrap();
    let m = nsolver.control_points().len();
    let zero = nsolver.apply_kn(&vec![0.0; m]).unwrap();
    assert!(zero.iter().all(|v| v.abs() < 1e-14));
    let psi: Vec<f64> = (0..m).map(|k| (k as f64 * 0.53).cos()).collect();
    let once = nsolver.apply_kn(&psi).unwrap();
    let thrice = nsolver
        .apply_kn(&psi.iter().map(|v| 3.0 * v).collect::<Vec<_>>())
        .unwrap();
    for (a, b) in thrice.iter().zip(once.iter()) {
        assert!((a - 3.0 * b).abs() < 1e-10);
    }
}

#[test]
fn volume_potential_is_linear_and_vanishes_on_zero_source() {
    let spec = |f: SourceTerm| BvpSpec {
        kappa: 1.0,
        boundary_condition: BoundaryCondition::Dirichlet(Arc::new(|_, _| 0.0)),
        source: Some(f),
        boundary: circle(),
        grid: build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 48, 48).unwrap(),
        control_spacing: None,
        options: SolverOptions::default(),
    };
    let zero = KfbiSolver::new(spec(SourceTerm::analytic(|_, _| 0.0)))
        .unwrap()
        .eval_volume_potential(ExtractionMode::Value)
        .unwrap()
        .0;
    assert!(zero.iter().all(|v| v.abs() < 1e-13));

    let f1 = |x: f64, y: f64| x + 2.0 * y;
    let f2 = |x: f64, _: f64| (3.0 * x).cos();
    let y1 = KfbiSolver::new(spec(SourceTerm::analytic(f1)))
        .unwrap()
        .eval_volume_potential(ExtractionMode::Value)
        .unwrap()
        .0;
    let y2 = KfbiSolver::new(spec(SourceTerm::analytic(f2)))
        .unwrap()
        .eval_volume_potential(ExtractionMode::Value)
        .unwrap()
        .0;
    let combo = KfbiSolver::new(spec(SourceTerm::analytic(move |x, y| {
        2.0 * f1(x, y) - 0.5 * f2(x, y)
    })))
    .unwrap()
    .eval_volume_potential(ExtractionMode::Value)
    .unwrap()
    .0;
    for ((c, a), b) in combo.iter().zip(y1.iter()).zip(y2.iter()) {
        assert!((c - (2.0 * a - 0.5 * b)).abs() < 1e-10);
    }
}

/// At convergence the operator applied to the returned density reproduces
/// the reduced boundary data within twice the tolerance.
#[test]
fn converged_density_is_an_operator_fixed_point() {
    let solver = dirichlet_solver(96, IterationScheme::Gmres, 1);
    let solution = solver.solve().unwrap();
    // No source and kappa = 0: the reduced data is g minus its mean.
    let control = solver.control_points();
    let g: Vec<f64> = control
        .iter()
        .map(|p| exp_trig(p.position.x, p.position.y))
        .collect();
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let reduced: Vec<f64> = g.iter().map(|v| v - mean).collect();
    let applied = solver.apply_kd(&solution.density).unwrap();
    let mut residual = 0.0_f64;
    for (a, r) in applied.iter().zip(reduced.iter()) {
        residual += (a - r) * (a - r);
    }
    let rel = (residual / g.len() as f64).sqrt() / boundary_norm(&reduced);
    assert!(rel < 2e-8, "fixed point residual {rel} above 2x tolerance");
}

/// The stored boundary data is what re-extraction from the interface field
/// gives (plus the constant shift), and it matches the imposed condition.
#[test]
fn solution_boundary_data_is_consistent() {
    let solver = dirichlet_solver(96, IterationScheme::Gmres, 1);
    let solution = solver.solve().unwrap();
    let layer = fit_density(solver.control_points(), &solution.density).unwrap();
    let spec = InterfaceSpec::double_layer(layer, 0.0);
    let jumps = solver.control_jumps(&spec).unwrap();
    let re = solver
        .extract(&solution.interface_field, &jumps, ExtractionMode::Value)
        .unwrap();
    for (stored, fresh) in solution.boundary_values.iter().zip(re.iter()) {
        assert!(
            (stored - (fresh + solution.constant_shift)).abs() < 1e-12,
            "stored {stored} vs re-extracted {fresh}"
        );
    }
    // And the Dirichlet condition holds at the control points.
    let mut worst = 0.0_f64;
    for (value, point) in solution.boundary_values.iter().zip(solver.control_points().iter()) {
        worst = worst.max((value - exp_trig(point.position.x, point.position.y)).abs());
    }
    assert!(worst < 1e-6, "boundary condition violated by {worst}");
}

/// Neumann solves enforce the flux condition at the control points.
#[test]
fn neumann_solution_enforces_flux() {
    let g_n = |x: f64, y: f64| {
        // Normal of the unit circle at the boundary point is (x, y).
        let (ux, uy) = (-x.sin() * y.sinh(), x.cos() * y.cosh());
        x * ux + y * uy
    };
    let solver = KfbiSolver::new(BvpSpec {
        kappa: 1.0,
        boundary_condition: BoundaryCondition::Neumann(Arc::new(g_n)),
        source: Some(SourceTerm::analytic(|x, y| -x.cos() * y.sinh())),
        boundary: circle(),
        grid: build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 96, 96).unwrap(),
        control_spacing: None,
        options: SolverOptions::default(),
    })
    .unwrap();
    let solution = solver.solve().unwrap();
    let mut worst = 0.0_f64;
    for (value, point) in solution
        .boundary_normal_derivatives
        .iter()
        .zip(solver.control_points().iter())
    {
        worst = worst.max((value - g_n(point.position.x, point.position.y)).abs());
    }
    assert!(worst < 1e-5, "flux condition violated by {worst}");
}

/// Richardson and GMRES converge to the same density on the circle Laplace
/// problem, within ten times the tolerance in the scaled norm.
#[test]
fn schemes_agree_on_the_density() {
    let gmres = dirichlet_solver(96, IterationScheme::Gmres, 1).solve().unwrap();
    let richardson = dirichlet_solver(96, IterationScheme::Richardson, 1)
        .solve()
        .unwrap();
    let diff: Vec<f64> = gmres
        .density
        .iter()
        .zip(richardson.density.iter())
        .map(|(a, b)| a - b)
        .collect();
    let rel = boundary_norm(&diff) / boundary_norm(&gmres.density);
    assert!(rel < 1e-7, "scheme disagreement {rel} above 10x tolerance");
}

/// Interpolating the converged interface solution from both sides recovers
/// the density jump. Both limits share one stencil, so the defect is exact
/// to rounding (well inside the O(h^2) the jump relation guarantees).
#[test]
fn interface_jump_matches_density() {
    let measure = |n: usize| -> f64 {
        let solver = dirichlet_solver(n, IterationScheme::Gmres, 1);
        let solution = solver.solve().unwrap();
        let layer = fit_density(solver.control_points(), &solution.density).unwrap();
        let spec = InterfaceSpec::double_layer(layer, 0.0);
        let jumps = solver.control_jumps(&spec).unwrap();
        let grid = &solver.spec().grid;
        let class = solver.classification();
        let mut worst = 0.0_f64;
        for (m, point) in solver.control_points().iter().enumerate() {
            let sel = select_stencil(grid, class, point.position).unwrap();
            let plus = one_sided_value(&solution.interface_field, &sel, &jumps[m])
                .unwrap()
                .value;
            // Exterior limit: swap the sides and negate the jumps.
            let mut swapped = sel.clone();
            for side in swapped.sides.iter_mut() {
                *side = match side {
                    Side::Interior => Side::Exterior,
                    Side::Exterior => Side::Interior,
                };
            }
            let negated = JumpData {
                v: -jumps[m].v,
                vx: -jumps[m].vx,
                vy: -jumps[m].vy,
                vxx: -jumps[m].vxx,
                vxy: -jumps[m].vxy,
                vyy: -jumps[m].vyy,
            };
            let minus = one_sided_value(&solution.interface_field, &swapped, &negated)
                .unwrap()
                .value;
            worst = worst.max(((plus - minus) - solution.density[m]).abs());
        }
        worst
    };
    for n in [48usize, 96] {
        let defect = measure(n);
        assert!(defect < 1e-12, "jump defect {defect} at n = {n}");
    }
}

/// The partitioned backend keeps its message discipline during a real solve.
#[test]
fn partitioned_solve_message_audit() {
    let workers = 4;
    let solver = dirichlet_solver(64, IterationScheme::Gmres, workers);
    let solution = solver.solve().unwrap();
    assert!(solution.stats.operator_applications > 0);
    let audit = solver.message_audit();
    assert!(!audit.is_empty());
    let mut saw_scatter = false;
    let mut saw_gather = false;
    for record in &audit {
        match record.tag {
            MessageTag::GhostExchange => {
                assert_eq!(record.from.abs_diff(record.to), 1, "non-adjacent ghost message");
            }
            MessageTag::BoundaryScatter => {
                saw_scatter = true;
                assert_eq!(record.from, 0);
            }
            MessageTag::BoundaryGather => {
                saw_gather = true;
                assert_eq!(record.to, 0);
            }
            MessageTag::Separator => {
                assert!(record.from == 0 || record.to == 0);
            }
        }
    }
    assert!(saw_scatter && saw_gather);
}

#[test]
fn invalid_specs_are_rejected() {
    let base = || BvpSpec {
        kappa: 0.0,
        boundary_condition: BoundaryCondition::Dirichlet(Arc::new(|_, _| 0.0)),
        source: None,
        boundary: circle(),
        grid: build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 32, 32).unwrap(),
        control_spacing: None,
        options: SolverOptions::default(),
    };

    let mut neumann_laplace = base();
    neumann_laplace.boundary_condition = BoundaryCondition::Neumann(Arc::new(|_, _| 0.0));
    assert!(matches!(
        KfbiSolver::new(neumann_laplace),
        Err(Error::NeumannNullspace)
    ));

    let mut bad_tol = base();
    bad_tol.options.tolerance = -1.0;
    assert!(matches!(
        KfbiSolver::new(bad_tol),
        Err(Error::InvalidParameter(_))
    ));

    let mut bad_gamma = base();
    bad_gamma.options.gamma = 1.5;
    assert!(matches!(
        KfbiSolver::new(bad_gamma),
        Err(Error::InvalidParameter(_))
    ));

    let mut too_many_workers = base();
    too_many_workers.options.workers = 16;
    assert!(matches!(
        KfbiSolver::new(too_many_workers),
        Err(Error::SlabTooSmall { .. })
    ));
}
