//! Run configuration: TOML file plus command-line overrides, validated
//! before any computation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use kfbi::bie::{BoundaryCondition, BvpSpec, IterationScheme, SolverOptions};
use kfbi::geometry::{build_boundary, CurveKind, ParametricBoundary, Vec2};
use kfbi::grid::{build_grid, CartesianGrid};
use kfbi::jumps::SourceTerm;
use kfbi::timestepper::GrayScottParams;

use crate::solutions::{self, ManufacturedSolution};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub pde: PdeConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub gray_scott: GrayScottConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub kappa: f64,
    /// "dirichlet" or "neumann".
    pub bc: String,
    /// Named manufactured solution supplying boundary data, source and the
    /// error reference.
    pub exact: String,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            bc: "dirichlet".into(),
            exact: "exp-trig".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// "circle", "ellipse" or "star".
    pub kind: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_radius")]
    pub semi_x: f64,
    #[serde(default = "default_radius")]
    pub semi_y: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_folds")]
    pub folds: u32,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

fn default_radius() -> f64 {
    1.0
}
fn default_amplitude() -> f64 {
    0.2
}
fn default_folds() -> u32 {
    4
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            kind: "circle".into(),
            radius: 1.0,
            semi_x: 1.0,
            semi_y: 1.0,
            amplitude: 0.2,
            folds: 4,
            rotation: 0.0,
            center: [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Box as [x_lo, x_hi, y_lo, y_hi].
    pub bounds: [f64; 4],
    /// Cells per direction.
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            bounds: [-1.2, 1.2, -1.2, 1.2],
            n: 128,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// "gmres" or "richardson".
    pub scheme: String,
    pub tol: f64,
    pub restart: usize,
    pub gamma: f64,
    pub workers: usize,
    /// Control point spacing in units of h.
    pub control_spacing_h: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: "gmres".into(),
            tol: 1e-8,
            restart: 30,
            gamma: 0.8,
            workers: 1,
            control_spacing_h: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Field output path.
    pub field: Option<String>,
    /// "csv" or "vtk".
    #[serde(default = "default_format")]
    pub format: String,
    /// JSON run report path.
    pub report: Option<String>,
    /// JSON-lines dump of the worker message audit (partitioned runs).
    pub audit: Option<String>,
    /// Snapshot times for gray-scott.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            field: None,
            format: default_format(),
            report: None,
            audit: None,
            snapshots: Vec::new(),
        }
    }
}

fn default_format() -> String {
    "csv".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub grids: Vec<usize>,
    /// Error table output path.
    pub table: Option<String>,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            grids: vec![64, 128, 256],
            table: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrayScottConfig {
    pub gamma: f64,
    pub kappa_r: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub dt: f64,
    pub end_time: f64,
}

impl Default for GrayScottConfig {
    fn default() -> Self {
        Self {
            gamma: 0.024,
            kappa_r: 0.06,
            eps0: 0.01,
            eps1: 0.008,
            eps2: 0.004,
            dt: 0.125,
            end_time: 1.0,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub box_bounds: Option<[f64; 4]>,
    pub domain: Option<String>,
    pub kappa: Option<f64>,
    pub bc: Option<String>,
    pub exact: Option<String>,
    pub scheme: Option<String>,
    pub tol: Option<f64>,
    pub gamma: Option<f64>,
    pub restart: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<String>,
    pub report: Option<String>,
    pub format: Option<String>,
    pub audit: Option<String>,
}

pub fn load_config(path: Option<&str>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("cannot read config {p}: {e}")))?;
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| CliError::Config(format!("config parse error in {p}: {e}")))?
        }
        None => RunConfig::default(),
    };

    if let Some(n) = overrides.grid {
        config.grid.n = n;
    }
    if let Some(b) = overrides.box_bounds {
        config.grid.bounds = b;
    }
    if let Some(domain) = &overrides.domain {
        apply_domain(&mut config.geometry, domain)?;
    }
    if let Some(k) = overrides.kappa {
        config.pde.kappa = k;
    }
    if let Some(bc) = &overrides.bc {
        config.pde.bc = bc.clone();
    }
    if let Some(exact) = &overrides.exact {
        config.pde.exact = exact.clone();
    }
    if let Some(s) = &overrides.scheme {
        config.solver.scheme = s.clone();
    }
    if let Some(t) = overrides.tol {
        config.solver.tol = t;
    }
    if let Some(g) = overrides.gamma {
        config.solver.gamma = g;
    }
    if let Some(r) = overrides.restart {
        config.solver.restart = r;
    }
    if let Some(w) = overrides.workers {
        config.solver.workers = w;
    }
    if let Some(o) = &overrides.out {
        config.output.field = Some(o.clone());
    }
    if let Some(r) = &overrides.report {
        config.output.report = Some(r.clone());
    }
    if let Some(f) = &overrides.format {
        config.output.format = f.clone();
    }
    if let Some(a) = &overrides.audit {
        config.output.audit = Some(a.clone());
    }

    validate(&config)?;
    Ok(config)
}

/// Parse `--domain kind:params`, e.g. `circle:1.0`, `ellipse:1.0,0.8`,
/// `star:1.0,0.2,4` or `star:1.0,0.2,4,0.3`.
fn apply_domain(geometry: &mut GeometryConfig, text: &str) -> Result<(), CliError> {
    let (kind, params) = text
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("domain must be kind:params, got {text}")))?;
    let values: Vec<f64> = params
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad domain parameter {v}")))
        })
        .collect::<Result<_, _>>()?;
    match (kind, values.as_slice()) {
        ("circle", [r]) => {
            geometry.kind = "circle".into();
            geometry.radius = *r;
        }
        ("ellipse", [a, b]) => {
            geometry.kind = "ellipse".into();
            geometry.semi_x = *a;
            geometry.semi_y = *b;
        }
        ("star", [r, c, m]) | ("star", [r, c, m, _]) => {
            geometry.kind = "star".into();
            geometry.radius = *r;
            geometry.amplitude = *c;
            geometry.folds = *m as u32;
            if let ("star", [_, _, _, rot]) = (kind, values.as_slice()) {
                geometry.rotation = *rot;
            }
        }
        _ => {
            return Err(CliError::Config(format!(
                "unknown domain spec {text}; expected circle:r, ellipse:a,b or star:r,c,m[,rot]"
            )))
        }
    }
    Ok(())
}

fn validate(config: &RunConfig) -> Result<(), CliError> {
    if !(config.solver.tol > 0.0) {
        return Err(CliError::Config(format!(
            "solver.tol must be positive, got {}",
            config.solver.tol
        )));
    }
    if !(config.solver.gamma > 0.0 && config.solver.gamma <= 1.0) {
        return Err(CliError::Config(format!(
            "solver.gamma must lie in (0, 1], got {}",
            config.solver.gamma
        )));
    }
    if config.solver.restart == 0 {
        return Err(CliError::Config("solver.restart must be at least 1".into()));
    }
    if config.solver.workers == 0 {
        return Err(CliError::Config("solver.workers must be at least 1".into()));
    }
    if config.solver.workers > 1 && config.grid.n / config.solver.workers < 4 {
        return Err(CliError::Config(format!(
            "{} workers need at least 4 grid columns each; grid n = {} is too small",
            config.solver.workers, config.grid.n
        )));
    }
    if config.pde.kappa < 0.0 {
        return Err(CliError::Config(format!(
            "pde.kappa must be nonnegative, got {}",
            config.pde.kappa
        )));
    }
    match config.pde.bc.as_str() {
        "dirichlet" | "neumann" => {}
        other => {
            return Err(CliError::Config(format!(
                "pde.bc must be dirichlet or neumann, got {other}"
            )))
        }
    }
    match config.solver.scheme.as_str() {
        "gmres" | "richardson" => {}
        other => {
            return Err(CliError::Config(format!(
                "solver.scheme must be gmres or richardson, got {other}"
            )))
        }
    }
    match config.output.format.as_str() {
        "csv" | "vtk" => {}
        other => {
            return Err(CliError::Config(format!(
                "output.format must be csv or vtk, got {other}"
            )))
        }
    }
    solutions::lookup(&config.pde.exact).ok_or_else(|| {
        CliError::Config(format!(
            "unknown exact solution {}; available: {}",
            config.pde.exact,
            solutions::names().join(", ")
        ))
    })?;
    let [x0, x1, y0, y1] = config.grid.bounds;
    if !(x1 > x0 && y1 > y0) {
        return Err(CliError::Config(format!(
            "grid.bounds must describe a nonempty box, got {:?}",
            config.grid.bounds
        )));
    }
    if config.grid.n < 2 {
        return Err(CliError::Config("grid.n must be at least 2".into()));
    }
    if !(config.solver.control_spacing_h > 0.0) {
        return Err(CliError::Config(
            "solver.control_spacing_h must be positive".into(),
        ));
    }
    Ok(())
}

pub fn build_geometry(config: &GeometryConfig) -> Result<ParametricBoundary, CliError> {
    let center = Vec2::new(config.center[0], config.center[1]);
    let kind = match config.kind.as_str() {
        "circle" => CurveKind::Circle {
            radius: config.radius,
        },
        "ellipse" => CurveKind::Ellipse {
            semi_x: config.semi_x,
            semi_y: config.semi_y,
        },
        "star" => CurveKind::Star {
            radius: config.radius,
            amplitude: config.amplitude,
            folds: config.folds,
            rotation: config.rotation,
        },
        other => {
            return Err(CliError::Config(format!(
                "geometry.kind must be circle, ellipse or star, got {other}"
            )))
        }
    };
    build_boundary(kind, center).map_err(CliError::from_solver)
}

pub fn build_grid_from(config: &GridConfig, n: usize) -> Result<CartesianGrid, CliError> {
    let [x0, x1, y0, y1] = config.bounds;
    build_grid(Vec2::new(x0, y0), Vec2::new(x1, y1), n, n).map_err(CliError::from_solver)
}

/// Assemble the BVP for one grid resolution.
pub fn build_bvp(config: &RunConfig, n: usize) -> Result<(BvpSpec, ManufacturedSolution), CliError> {
    let boundary = build_geometry(&config.geometry)?;
    let grid = build_grid_from(&config.grid, n)?;
    let exact = solutions::lookup(&config.pde.exact)
        .ok_or_else(|| CliError::Config(format!("unknown exact solution {}", config.pde.exact)))?;
    let kappa = config.pde.kappa;

    let boundary_condition = match config.pde.bc.as_str() {
        "dirichlet" => {
            let u = exact.value;
            BoundaryCondition::Dirichlet(Arc::new(move |x, y| u(x, y)))
        }
        "neumann" => {
            let grad = exact.gradient;
            let b = boundary.clone();
            BoundaryCondition::Neumann(Arc::new(move |x, y| {
                let t = b.parameter_of_point(Vec2::new(x, y));
                let frame = b.frame_at_parameter(t);
                let (ux, uy) = grad(x, y);
                frame.normal.x * ux + frame.normal.y * uy
            }))
        }
        _ => unreachable!("validated earlier"),
    };
    let source: Option<SourceTerm> = match exact.source {
        Some(f) => Some(SourceTerm::analytic(move |x, y| f(x, y, kappa))),
        None => None,
    };
    let scheme = match config.solver.scheme.as_str() {
        "richardson" => IterationScheme::Richardson,
        _ => IterationScheme::Gmres,
    };
    let spec = BvpSpec {
        kappa,
        boundary_condition,
        source,
        control_spacing: Some(config.solver.control_spacing_h * grid.h),
        boundary,
        grid,
        options: SolverOptions {
            scheme,
            tolerance: config.solver.tol,
            restart: config.solver.restart,
            gamma: config.solver.gamma,
            workers: config.solver.workers,
            ..SolverOptions::default()
        },
    };
    Ok((spec, exact))
}

pub fn gray_scott_params(config: &GrayScottConfig) -> GrayScottParams {
    GrayScottParams {
        gamma: config.gamma,
        kappa_r: config.kappa_r,
        eps0: config.eps0,
        eps1: config.eps1,
        eps2: config.eps2,
        dt: config.dt,
        end_time: config.end_time,
    }
}
