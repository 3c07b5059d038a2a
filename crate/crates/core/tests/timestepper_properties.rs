//! Splitting-order comparisons and worker determinism for the time stepper.

mod common;

use kfbi::geometry::{build_boundary, CurveKind, ParametricBoundary, Vec2};
use kfbi::grid::{build_grid, CartesianGrid};
use kfbi::timestepper::{
    pointwise_reaction, run_gray_scott, DiffusionStepper, GrayScottParams, SpeciesState,
};

fn disk() -> ParametricBoundary {
    build_boundary(CurveKind::Circle { radius: 1.8 }, Vec2::new(0.0, 0.0)).unwrap()
}

fn disk_grid(n: usize) -> CartesianGrid {
    build_grid(Vec2::new(-2.0, -2.0), Vec2::new(2.0, 2.0), n, n).unwrap()
}

fn initial_bump(stepper: &DiffusionStepper) -> SpeciesState {
    stepper.sample_species(|x, y| {
        let r2 = (x * x + y * y) / (1.8_f64 * 1.8);
        (1.0 - r2).max(0.0).powi(2)
    })
}

/// Pure diffusion against the radial Neumann mode of the disk: halving dt
/// scales the Crank-Nicolson error by about four.
#[test]
fn diffusion_substep_is_second_order_in_time() {
    let boundary = disk();
    let grid = disk_grid(128);
    let eps = 0.2;
    let t_end = 1.6;
    let sqrt_lambda = common::J1_FIRST_ZERO / 1.8;
    let lambda = sqrt_lambda * sqrt_lambda;
    let mut errors = Vec::new();
    for dt in [0.8, 0.4, 0.2] {
        let stepper = DiffusionStepper::new(&boundary, &grid, eps, dt, 1).unwrap();
        let mut state =
            stepper.sample_species(|x, y| common::bessel_j0(sqrt_lambda * x.hypot(y)));
        for _ in 0..(t_end / dt).round() as usize {
            state = stepper.step(&state).unwrap();
        }
        let factor = (-eps * lambda * t_end).exp();
        let class = stepper.classification();
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if class.is_interior(i, j) {
                    let want = factor * common::bessel_j0(sqrt_lambda * grid.x(i).hypot(grid.y(j)));
                    let d = state.grid_values.get(i, j) - want;
                    sum += d * d;
                    count += 1;
                }
            }
        }
        errors.push((sum / count as f64).sqrt());
    }
    let r1 = errors[0] / errors[1];
    let r2 = errors[1] / errors[2];
    assert!(
        (3.4..=4.6).contains(&r1) && (3.4..=4.6).contains(&r2),
        "diffusion error ratios ({r1:.2}, {r2:.2}) outside [3.4, 4.6]: {errors:?}"
    );
}

/// Lie splitting is first order and Strang beats it on a noncommuting
/// linear problem. Self-convergence differences are measured over an
/// interior ball, away from the dt-coupled boundary layers of the
/// diffusion solves.
#[test]
fn strang_beats_lie_splitting() {
    let boundary = disk();
    let grid = disk_grid(96);
    let eps = 0.2;
    let t_end = 1.6;
    let rate = |x: f64, _y: f64, u: f64| x * u;
    let dts = [0.8, 0.4, 0.2, 0.1];

    let run = |dt: f64, strang: bool| -> SpeciesState {
        let stepper = DiffusionStepper::new(&boundary, &grid, eps, dt, 1).unwrap();
        let mut state = initial_bump(&stepper);
        for _ in 0..(t_end / dt).round() as usize {
            if strang {
                state = pointwise_reaction(
                    &state,
                    &grid,
                    stepper.classification(),
                    stepper.control_points(),
                    rate,
                    0.5 * dt,
                )
                .unwrap();
                state = stepper.step(&state).unwrap();
                state = pointwise_reaction(
                    &state,
                    &grid,
                    stepper.classification(),
                    stepper.control_points(),
                    rate,
                    0.5 * dt,
                )
                .unwrap();
            } else {
                state = pointwise_reaction(
                    &state,
                    &grid,
                    stepper.classification(),
                    stepper.control_points(),
                    rate,
                    dt,
                )
                .unwrap();
                state = stepper.step(&state).unwrap();
            }
        }
        state
    };

    let ball_diff = |a: &SpeciesState, b: &SpeciesState| -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if grid.x(i).hypot(grid.y(j)) <= 1.0 {
                    let d = a.grid_values.get(i, j) - b.grid_values.get(i, j);
                    sum += d * d;
                    count += 1;
                }
            }
        }
        (sum / count as f64).sqrt()
    };

    let strang: Vec<_> = dts.iter().map(|&dt| run(dt, true)).collect();
    let lie: Vec<_> = dts.iter().map(|&dt| run(dt, false)).collect();
    let strang_d: Vec<f64> = strang.windows(2).map(|w| ball_diff(&w[0], &w[1])).collect();
    let lie_d: Vec<f64> = lie.windows(2).map(|w| ball_diff(&w[0], &w[1])).collect();

    // Each scheme is judged in its asymptotic window: the Lie ratio on the
    // fine pairs (its dt^2 remainder pollutes coarse steps), the Strang
    // ratio on the coarse pairs (above the spatial floor).
    let lie_ratio = lie_d[1] / lie_d[2];
    assert!(
        (1.7..=2.5).contains(&lie_ratio),
        "Lie self-convergence ratio {lie_ratio:.2} not first order (diffs {lie_d:?})"
    );
    let strang_ratio = strang_d[0] / strang_d[1];
    assert!(
        strang_ratio > 3.4,
        "Strang self-convergence ratio {strang_ratio:.2} not second order (diffs {strang_d:?})"
    );
    for (s, l) in strang_d.iter().zip(lie_d.iter()) {
        assert!(s < l, "Strang differences should undercut Lie: {strang_d:?} vs {lie_d:?}");
    }
}

/// The final state does not depend on the worker count.
#[test]
fn gray_scott_worker_determinism() {
    let boundary = disk();
    let grid = disk_grid(64);
    let params = GrayScottParams {
        dt: 0.25,
        end_time: 1.0,
        ..GrayScottParams::default()
    };
    let (single, _) = run_gray_scott(params.clone(), &boundary, &grid, 4, &[], 1).unwrap();
    let (multi, _) = run_gray_scott(params, &boundary, &grid, 4, &[], 4).unwrap();
    let mut worst = 0.0_f64;
    for (a, b) in single
        .u
        .grid_values
        .values()
        .iter()
        .zip(multi.u.grid_values.values())
    {
        worst = worst.max((a - b).abs());
    }
    for (a, b) in single
        .v
        .grid_values
        .values()
        .iter()
        .zip(multi.v.grid_values.values())
    {
        worst = worst.max((a - b).abs());
    }
    assert!(worst < 1e-8, "worker count changed the state by {worst}");
}
