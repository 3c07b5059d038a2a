//! Command line front end for the KFBI elliptic solver: solve single
//! problems, run convergence studies, integrate the Gray-Scott demo, and
//! self-test the solver modules.

mod config;
mod output;
mod selftest;
mod solutions;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use kfbi::bie::KfbiSolver;
use kfbi::grid::classify_nodes;
use kfbi::timestepper::run_gray_scott;

use config::{
    build_bvp, build_geometry, build_grid_from, gray_scott_params, load_config, Overrides,
    RunConfig,
};
use output::{
    error_table_csv, error_table_json, fmt_f64, write_audit, write_field_csv, write_field_vtk,
    write_report, ErrorRow,
};

/// Errors surfaced to the user, mapped to exit codes: config 2, solver 3,
/// i/o 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
}

impl CliError {
    fn from_solver(err: kfbi::Error) -> Self {
        match err {
            kfbi::Error::NoConvergence { .. } | kfbi::Error::BlowUp { .. } => {
                CliError::Solver(err.to_string())
            }
            kfbi::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn prefix(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Solver(_) => "solver",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Solver(m) | CliError::Io(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "kfbi",
    about = "Kernel-free boundary integral solver for elliptic problems on irregular domains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonFlags {
    /// TOML configuration file; flags override file values.
    #[arg(long)]
    config: Option<String>,
    /// Cells per grid direction.
    #[arg(long)]
    grid: Option<usize>,
    /// Bounding box "x_lo,x_hi,y_lo,y_hi".
    #[arg(long = "box", value_name = "BOX", allow_hyphen_values = true)]
    box_bounds: Option<String>,
    /// Domain spec: circle:r, ellipse:a,b or star:r,c,m[,rot].
    #[arg(long)]
    domain: Option<String>,
    /// Helmholtz coefficient kappa >= 0 (0 = Laplace).
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Boundary condition: dirichlet or neumann.
    #[arg(long)]
    bc: Option<String>,
    /// Built-in exact solution name.
    #[arg(long)]
    exact: Option<String>,
    /// Iteration scheme: gmres or richardson.
    #[arg(long)]
    scheme: Option<String>,
    /// Relative residual tolerance.
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// Richardson relaxation factor.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// GMRES restart dimension.
    #[arg(long)]
    restart: Option<usize>,
    /// Worker count for the partitioned solver.
    #[arg(long)]
    workers: Option<usize>,
    /// Field output path.
    #[arg(long)]
    out: Option<String>,
    /// JSON report output path.
    #[arg(long)]
    report: Option<String>,
    /// Field format: csv or vtk.
    #[arg(long)]
    format: Option<String>,
    /// JSON-lines dump of worker messages (partitioned runs).
    #[arg(long)]
    audit: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one boundary value problem.
    Solve(CommonFlags),
    /// Run a grid refinement study and write the error table.
    Converge(CommonFlags),
    /// Integrate the Gray-Scott reaction-diffusion demo.
    GrayScott(CommonFlags),
    /// Run quick self-checks of every solver module.
    Selftest,
}

fn overrides_from(flags: &CommonFlags) -> Result<Overrides, CliError> {
    let box_bounds = match &flags.box_bounds {
        Some(text) => {
            let parts: Vec<f64> = text
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Config(format!("bad box value {v}")))
                })
                .collect::<Result<_, _>>()?;
            if parts.len() != 4 {
                return Err(CliError::Config(format!(
                    "box needs 4 comma-separated values, got {text}"
                )));
            }
            Some([parts[0], parts[1], parts[2], parts[3]])
        }
        None => None,
    };
    Ok(Overrides {
        grid: flags.grid,
        box_bounds,
        domain: flags.domain.clone(),
        kappa: flags.kappa,
        bc: flags.bc.clone(),
        exact: flags.exact.clone(),
        scheme: flags.scheme.clone(),
        tol: flags.tol,
        gamma: flags.gamma,
        restart: flags.restart,
        workers: flags.workers,
        out: flags.out.clone(),
        report: flags.report.clone(),
        format: flags.format.clone(),
        audit: flags.audit.clone(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(flags) => run_solve(flags),
        Command::Converge(flags) => run_converge(flags),
        Command::GrayScott(flags) => run_gray_scott_cmd(flags),
        Command::Selftest => {
            let failures = selftest::run();
            if failures == 0 {
                println!("selftest: all checks passed");
                return ExitCode::SUCCESS;
            }
            eprintln!("error[solver]: selftest reported {failures} failing checks");
            return ExitCode::from(3);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {}", err.prefix(), err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn write_field_as(
    config: &RunConfig,
    field: &kfbi::grid::GridField,
    grid: &kfbi::grid::CartesianGrid,
    class: &kfbi::grid::NodeClassification,
    path: &str,
) -> Result<(), CliError> {
    match config.output.format.as_str() {
        "vtk" => write_field_vtk(field, grid, class, path),
        _ => write_field_csv(field, grid, class, path),
    }
}

fn run_solve(flags: &CommonFlags) -> Result<(), CliError> {
    let overrides = overrides_from(flags)?;
    let config = load_config(flags.config.as_deref(), &overrides)?;
    let started = Instant::now();
    let (spec, exact) = build_bvp(&config, config.grid.n)?;
    let solver = KfbiSolver::new(spec).map_err(CliError::from_solver)?;
    let solution = solver.solve().map_err(CliError::from_solver)?;
    let (e_l2, e_inf) = solver.error_norms(&solution.field, exact.value);
    let wall = started.elapsed().as_secs_f64();

    println!(
        "solve: grid {n}x{n}, {scheme} converged after {apps} operator applications \
         (inner {inner}), residual {res:.3e}",
        n = config.grid.n,
        scheme = config.solver.scheme,
        apps = solution.stats.operator_applications,
        inner = solution.stats.inner_iterations,
        res = solution.stats.residual_history.last().copied().unwrap_or(0.0),
    );
    println!(
        "errors vs {}: e_inf = {}, e_l2 = {}",
        config.pde.exact,
        fmt_f64(e_inf),
        fmt_f64(e_l2)
    );

    if let Some(path) = &config.output.field {
        write_field_as(
            &config,
            &solution.field,
            &solver.spec().grid,
            solver.classification(),
            path,
        )?;
        println!("field written to {path}");
    }
    if let Some(path) = &config.output.audit {
        write_audit(&solver.message_audit(), path)?;
        println!("message audit written to {path}");
    }
    if let Some(path) = &config.output.report {
        let report = json!({
            "schema_version": 1,
            "command": "solve",
            "config": serde_json::to_value(&config).unwrap(),
            "workers": config.solver.workers,
            "iterations": {
                "scheme": config.solver.scheme,
                "outer": solution.stats.outer_iterations,
                "inner": solution.stats.inner_iterations,
                "operator_applications": solution.stats.operator_applications,
            },
            "residual_history": solution.stats.residual_history,
            "errors": { "e_inf": e_inf, "e_l2": e_l2 },
            "wall_time_seconds": wall,
        });
        write_report(&report, path)?;
        println!("report written to {path}");
    }
    Ok(())
}

fn run_converge(flags: &CommonFlags) -> Result<(), CliError> {
    let overrides = overrides_from(flags)?;
    let config = load_config(flags.config.as_deref(), &overrides)?;
    let started = Instant::now();
    let mut rows: Vec<ErrorRow> = Vec::new();
    for &n in &config.converge.grids {
        let row = match solve_one_grid(&config, n) {
            Ok((h, e_inf, e_l2, iters)) => {
                let (mut order_inf, mut order_l2) = (None, None);
                if let Some(prev) = rows.last() {
                    if let (Some(pi), Some(pl)) = (prev.e_inf, prev.e_l2) {
                        order_inf = Some((pi / e_inf).log2());
                        order_l2 = Some((pl / e_l2).log2());
                    }
                }
                ErrorRow {
                    grid: n,
                    h,
                    e_inf: Some(e_inf),
                    e_l2: Some(e_l2),
                    order_inf,
                    order_l2,
                    iters: Some(iters),
                }
            }
            Err(err) => {
                eprintln!("warning: grid {n} failed: {}", err.message());
                ErrorRow {
                    grid: n,
                    h: (config.grid.bounds[1] - config.grid.bounds[0]) / n as f64,
                    e_inf: None,
                    e_l2: None,
                    order_inf: None,
                    order_l2: None,
                    iters: None,
                }
            }
        };
        rows.push(row);
    }
    let csv = error_table_csv(&rows);
    print!("{csv}");
    if let Some(path) = &config.converge.table {
        std::fs::write(path, &csv).map_err(|e| CliError::Io(format!("writing {path}: {e}")))?;
        println!("error table written to {path}");
    }
    if let Some(path) = &config.output.report {
        let report = json!({
            "schema_version": 1,
            "command": "converge",
            "config": serde_json::to_value(&config).unwrap(),
            "workers": config.solver.workers,
            "error_table": error_table_json(&rows),
            "wall_time_seconds": started.elapsed().as_secs_f64(),
        });
        write_report(&report, path)?;
        println!("report written to {path}");
    }
    Ok(())
}

fn solve_one_grid(config: &RunConfig, n: usize) -> Result<(f64, f64, f64, usize), CliError> {
    let (spec, exact) = build_bvp(config, n)?;
    let h = spec.grid.h;
    let solver = KfbiSolver::new(spec).map_err(CliError::from_solver)?;
    let solution = solver.solve().map_err(CliError::from_solver)?;
    let (e_l2, e_inf) = solver.error_norms(&solution.field, exact.value);
    Ok((h, e_inf, e_l2, solution.stats.operator_applications))
}

fn run_gray_scott_cmd(flags: &CommonFlags) -> Result<(), CliError> {
    let overrides = overrides_from(flags)?;
    let config = load_config(flags.config.as_deref(), &overrides)?;
    let started = Instant::now();
    let boundary = build_geometry(&config.geometry)?;
    let grid = build_grid_from(&config.grid, config.grid.n)?;
    let params = gray_scott_params(&config.gray_scott);
    let steps = (params.end_time / params.dt).round() as usize;
    let (state, snapshots) = run_gray_scott(
        params.clone(),
        &boundary,
        &grid,
        steps,
        &config.output.snapshots,
        config.solver.workers,
    )
    .map_err(CliError::from_solver)?;

    let bounds = |values: &[f64]| {
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (u_lo, u_hi) = bounds(state.u.grid_values.values());
    let (v_lo, v_hi) = bounds(state.v.grid_values.values());
    println!(
        "gray-scott: {steps} steps of dt = {} to t = {}; u in [{u_lo:.4}, {u_hi:.4}], v in [{v_lo:.4}, {v_hi:.4}]",
        params.dt, state.time
    );

    let class = classify_nodes(&grid, &boundary).map_err(CliError::from_solver)?;
    if let Some(path) = &config.output.field {
        let (upath, vpath) = species_paths(path);
        write_field_as(&config, &state.u.grid_values, &grid, &class, &upath)?;
        write_field_as(&config, &state.v.grid_values, &grid, &class, &vpath)?;
        println!("final fields written to {upath} and {vpath}");
        for (time, snap) in &snapshots {
            let stem = snapshot_path(path, *time);
            let (su, sv) = species_paths(&stem);
            write_field_as(&config, &snap.u.grid_values, &grid, &class, &su)?;
            write_field_as(&config, &snap.v.grid_values, &grid, &class, &sv)?;
        }
        if !snapshots.is_empty() {
            println!("{} snapshots written", snapshots.len());
        }
    }
    if let Some(path) = &config.output.report {
        let report = json!({
            "schema_version": 1,
            "command": "gray-scott",
            "config": serde_json::to_value(&config).unwrap(),
            "workers": config.solver.workers,
            "steps": steps,
            "dt": params.dt,
            "end_time": state.time,
            "ranges": { "u": [u_lo, u_hi], "v": [v_lo, v_hi] },
            "snapshot_times": snapshots.iter().map(|(t, _)| *t).collect::<Vec<f64>>(),
            "wall_time_seconds": started.elapsed().as_secs_f64(),
        });
        write_report(&report, path)?;
        println!("report written to {path}");
    }
    Ok(())
}

/// `out.csv` -> (`out-u.csv`, `out-v.csv`).
fn species_paths(path: &str) -> (String, String) {
    match path.rsplit_once('.') {
        Some((stem, ext)) => (format!("{stem}-u.{ext}"), format!("{stem}-v.{ext}")),
        None => (format!("{path}-u"), format!("{path}-v")),
    }
}

/// `out.csv` at time 2.5 -> `out-t2.5.csv`.
fn snapshot_path(path: &str, time: f64) -> String {
    match path.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}-t{time}.{ext}"),
        None => format!("{path}-t{time}"),
    }
}
