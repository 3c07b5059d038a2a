//! Quick self-checks of every solver module, exercising the cheap known
//! answers. Prints one PASS/FAIL line per check.

use std::f64::consts::PI;
use std::sync::Arc;

use kfbi::arrowhead;
use kfbi::bie::{self, BoundaryCondition, BvpSpec, KfbiSolver, SolverOptions};
use kfbi::correction::{base_rhs, correct_rhs};
use kfbi::fast_poisson::{thomas_solve, SpectralPlan, Tridiagonal, TridiagonalSystem};
use kfbi::geometry::{build_boundary, discretize_boundary, CurveKind, Side, Vec2};
use kfbi::grid::{build_grid, classify_nodes, find_intersections, GridField};
use kfbi::interpolation::{one_sided_value, select_stencil};
use kfbi::jumps::{fit_density, jumps_at, InterfaceSpec, JumpData};
use kfbi::partition::{gather_boundary, partition_grid, scatter_boundary};
use kfbi::timestepper::{GrayScottParams, GrayScottStepper, StateUv};

type Check = (&'static str, fn() -> Result<(), String>);

fn expect(ok: bool, what: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn geometry_check() -> Result<(), String> {
    let b = build_boundary(CurveKind::Circle { radius: 1.0 }, Vec2::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    expect((b.perimeter() - 2.0 * PI).abs() < 1e-8, "circle perimeter")?;
    expect(b.side_of(Vec2::new(0.0, 0.0)) == Side::Interior, "center interior")?;
    expect(b.side_of(Vec2::new(1.1, 0.0)) == Side::Exterior, "outside exterior")?;
    let pts = discretize_boundary(&b, 2.0 * PI / 16.0).map_err(|e| e.to_string())?;
    expect(pts.len() == 16, "16 control points")
}

fn grid_check() -> Result<(), String> {
    let g = build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 8, 8)
        .map_err(|e| e.to_string())?;
    let b = build_boundary(CurveKind::Circle { radius: 1.0 }, Vec2::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let class = classify_nodes(&g, &b).map_err(|e| e.to_string())?;
    expect(class.interior_count() == 37, "37 interior nodes")?;
    let inter = find_intersections(&g, &class, &b).map_err(|e| e.to_string())?;
    expect(inter.len() == 28, "28 intersections")
}

fn jumps_check() -> Result<(), String> {
    let b = build_boundary(CurveKind::Circle { radius: 1.0 }, Vec2::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let pts = discretize_boundary(&b, b.perimeter() / 32.0).map_err(|e| e.to_string())?;
    let spec = InterfaceSpec::double_layer(
        fit_density(&pts, &vec![2.5; 32]).map_err(|e| e.to_string())?,
        0.0,
    );
    let frame = b.frame_at(0.2);
    let j = jumps_at(&spec, &b, &frame, 0.2).map_err(|e| e.to_string())?;
    expect((j.v - 2.5).abs() < 1e-12, "[v] = density")?;
    expect(
        j.vx.abs() + j.vy.abs() + j.vxx.abs() + j.vxy.abs() + j.vyy.abs() < 1e-9,
        "derivative jumps vanish for constant density on Laplace",
    )
}

fn correction_check() -> Result<(), String> {
    let b = build_boundary(CurveKind::Circle { radius: 1.0 }, Vec2::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let g = build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 16, 16)
        .map_err(|e| e.to_string())?;
    let class = classify_nodes(&g, &b).map_err(|e| e.to_string())?;
    let inter = find_intersections(&g, &class, &b).map_err(|e| e.to_string())?;
    let pts = discretize_boundary(&b, b.perimeter() / 32.0).map_err(|e| e.to_string())?;
    let spec = InterfaceSpec::double_layer(
        fit_density(&pts, &vec![0.0; 32]).map_err(|e| e.to_string())?,
        0.0,
    );
    let base = base_rhs(&spec, &g, &class);
    let corrected = correct_rhs(&base, &spec, &g, &class, &inter, &b).map_err(|e| e.to_string())?;
    expect(
        corrected.field == base,
        "zero density needs no correction",
    )
}

fn fast_poisson_check() -> Result<(), String> {
    let g = build_grid(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), 16, 16)
        .map_err(|e| e.to_string())?;
    let plan = SpectralPlan::new(&g, 0.0).map_err(|e| e.to_string())?;
    let input: Vec<f64> = (0..15).map(|k| (k as f64 * 0.71).sin()).collect();
    let back = plan.idst1(&plan.dst1(&input));
    for (a, b) in input.iter().zip(back.iter()) {
        expect((a - b).abs() < 1e-12, "transform round trip")?;
    }
    let sys = TridiagonalSystem {
        matrix: Tridiagonal {
            sub: vec![-1.0; 5],
            diag: vec![2.0; 5],
            sup: vec![-1.0; 5],
        },
        rhs: vec![1.0, 0.0, 0.0, 0.0, 1.0],
    };
    let x = thomas_solve(&sys).map_err(|e| e.to_string())?;
    expect(x.iter().all(|v| (v - 1.0).abs() < 1e-12), "Thomas all-ones")
}

fn arrowhead_check() -> Result<(), String> {
    let matrix = Tridiagonal {
        sub: vec![-1.0; 5],
        diag: vec![2.0; 5],
        sup: vec![-1.0; 5],
    };
    let (map, mut sys) = arrowhead::decompose(&matrix, 2).map_err(|e| e.to_string())?;
    expect(map.separators == vec![2], "separator placement")?;
    sys.precompute_schur().map_err(|e| e.to_string())?;
    let u = sys.solve(&[1.0, 0.0, 0.0, 0.0, 1.0]).map_err(|e| e.to_string())?;
    expect(u.iter().all(|v| (v - 1.0).abs() < 1e-12), "arrowhead all-ones")
}

fn interpolation_check() -> Result<(), String> {
    let b = build_boundary(CurveKind::Circle { radius: 1.0 }, Vec2::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let g = build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 24, 24)
        .map_err(|e| e.to_string())?;
    let class = classify_nodes(&g, &b).map_err(|e| e.to_string())?;
    let field = GridField::from_fn(&g, |x, y| x * x + y);
    let frame = b.frame_at(1.0);
    let sel = select_stencil(&g, &class, frame.point).map_err(|e| e.to_string())?;
    let data =
        one_sided_value(&field, &sel, &JumpData::default()).map_err(|e| e.to_string())?;
    let z = frame.point;
    expect(
        (data.value - (z.x * z.x + z.y)).abs() < 1e-10,
        "quadratic reproduction",
    )
}

fn bie_check() -> Result<(), String> {
    let rhs = vec![1.0, -2.0, 0.5];
    let (x, stats) = bie::gmres_solve(|v: &[f64]| Ok(v.to_vec()), &rhs, 5, 1e-12, 3)
        .map_err(|e| e.to_string())?;
    expect(stats.inner_iterations == 1, "identity converges in one step")?;
    for (a, b) in x.iter().zip(rhs.iter()) {
        expect((a - b).abs() < 1e-12, "identity solution")?;
    }
    // Constant solution through the whole chain: u = 1, kappa = 1, f = -1.
    let b = build_boundary(CurveKind::Circle { radius: 1.0 }, Vec2::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let g = build_grid(Vec2::new(-1.2, -1.2), Vec2::new(1.2, 1.2), 32, 32)
        .map_err(|e| e.to_string())?;
    let spec = BvpSpec {
        kappa: 1.0,
        boundary_condition: BoundaryCondition::Dirichlet(Arc::new(|_, _| 1.0)),
        source: Some(kfbi::jumps::SourceTerm::analytic(|_, _| -1.0)),
        boundary: b,
        grid: g,
        control_spacing: None,
        options: SolverOptions::default(),
    };
    let solver = KfbiSolver::new(spec).map_err(|e| e.to_string())?;
    let solution = solver.solve().map_err(|e| e.to_string())?;
    let (_, linf) = solver.error_norms(&solution.field, |_, _| 1.0);
    expect(linf < 5e-11, "constant Dirichlet solution reproduced")
}

fn partition_check() -> Result<(), String> {
    let g = build_grid(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), 16, 16)
        .map_err(|e| e.to_string())?;
    let p = partition_grid(&g, 4).map_err(|e| e.to_string())?;
    expect(
        p.ranges.iter().all(|r| r.len() == 4),
        "balanced 4-column slabs",
    )?;
    let owners: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let values: Vec<f64> = (0..12).map(|i| i as f64).collect();
    let parts = scatter_boundary(&values, &owners, 3);
    let back = gather_boundary(&parts, 12);
    expect(back == values, "scatter/gather round trip")
}

fn timestepper_check() -> Result<(), String> {
    let b = build_boundary(CurveKind::Circle { radius: 1.8 }, Vec2::new(0.0, 0.0))
        .map_err(|e| e.to_string())?;
    let g = build_grid(Vec2::new(-2.0, -2.0), Vec2::new(2.0, 2.0), 32, 32)
        .map_err(|e| e.to_string())?;
    let stepper = GrayScottStepper::new(GrayScottParams::default(), &b, &g, 1)
        .map_err(|e| e.to_string())?;
    let u = stepper.diffusion_u().sample_species(|_, _| 1.0);
    let v = stepper.diffusion_u().sample_species(|_, _| 0.0);
    let state = StateUv { u, v, time: 0.0 };
    let next = stepper.strang_step(&state).map_err(|e| e.to_string())?;
    for (a, b) in next
        .u
        .grid_values
        .values()
        .iter()
        .zip(state.u.grid_values.values())
    {
        expect((a - b).abs() < 1e-8, "equilibrium preserved over one step")?;
    }
    Ok(())
}

/// Run all module checks; returns the number of failures.
pub fn run() -> usize {
    let checks: Vec<Check> = vec![
        ("geometry", geometry_check),
        ("grid", grid_check),
        ("jumps", jumps_check),
        ("correction", correction_check),
        ("fast_poisson", fast_poisson_check),
        ("arrowhead", arrowhead_check),
        ("interpolation", interpolation_check),
        ("bie", bie_check),
        ("partition", partition_check),
        ("timestepper", timestepper_check),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failures += 1;
            }
        }
    }
    failures
}
