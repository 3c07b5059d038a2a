//! Built-in manufactured solutions for solve/converge runs. Each supplies
//! the exact solution, its gradient (for Neumann data) and the source term
//! `f = lap(u) - kappa u` as a function of kappa.

/// One manufactured solution; all members are plain function pointers so the
/// set stays a static table.
#[derive(Clone, Copy)]
pub struct ManufacturedSolution {
    pub name: &'static str,
    pub value: fn(f64, f64) -> f64,
    pub gradient: fn(f64, f64) -> (f64, f64),
    /// `f(x, y, kappa)`; `None` means identically zero (harmonic with
    /// kappa = 0).
    pub source: Option<fn(f64, f64, f64) -> f64>,
}

fn exp_trig(x: f64, y: f64) -> f64 {
    x.exp() * y.cos() + y.exp() * x.sin()
}

fn exp_trig_grad(x: f64, y: f64) -> (f64, f64) {
    (
        x.exp() * y.cos() + y.exp() * x.cos(),
        -x.exp() * y.sin() + y.exp() * x.sin(),
    )
}

// exp_trig is harmonic, so f = -kappa u.
fn exp_trig_source(x: f64, y: f64, kappa: f64) -> f64 {
    -kappa * exp_trig(x, y)
}

fn one(_: f64, _: f64) -> f64 {
    1.0
}

fn one_grad(_: f64, _: f64) -> (f64, f64) {
    (0.0, 0.0)
}

fn one_source(_: f64, _: f64, kappa: f64) -> f64 {
    -kappa
}

fn cubic_harmonic(x: f64, y: f64) -> f64 {
    x.powi(3) - 3.0 * x * y * y
}

fn cubic_harmonic_grad(x: f64, y: f64) -> (f64, f64) {
    (3.0 * x * x - 3.0 * y * y, -6.0 * x * y)
}

fn cubic_harmonic_source(x: f64, y: f64, kappa: f64) -> f64 {
    -kappa * cubic_harmonic(x, y)
}

fn cos_sinh(x: f64, y: f64) -> f64 {
    x.cos() * y.sinh()
}

fn cos_sinh_grad(x: f64, y: f64) -> (f64, f64) {
    (-x.sin() * y.sinh(), x.cos() * y.cosh())
}

fn cos_sinh_source(x: f64, y: f64, kappa: f64) -> f64 {
    -kappa * cos_sinh(x, y)
}

fn quadratic(x: f64, y: f64) -> f64 {
    x * x + y * y
}

fn quadratic_grad(x: f64, y: f64) -> (f64, f64) {
    (2.0 * x, 2.0 * y)
}

fn quadratic_source(x: f64, y: f64, kappa: f64) -> f64 {
    4.0 - kappa * quadratic(x, y)
}

const SOLUTIONS: &[ManufacturedSolution] = &[
    ManufacturedSolution {
        name: "exp-trig",
        value: exp_trig,
        gradient: exp_trig_grad,
        source: Some(exp_trig_source),
    },
    ManufacturedSolution {
        name: "constant-one",
        value: one,
        gradient: one_grad,
        source: Some(one_source),
    },
    ManufacturedSolution {
        name: "cubic-harmonic",
        value: cubic_harmonic,
        gradient: cubic_harmonic_grad,
        source: Some(cubic_harmonic_source),
    },
    ManufacturedSolution {
        name: "cos-sinh",
        value: cos_sinh,
        gradient: cos_sinh_grad,
        source: Some(cos_sinh_source),
    },
    ManufacturedSolution {
        name: "quadratic",
        value: quadratic,
        gradient: quadratic_grad,
        source: Some(quadratic_source),
    },
];

pub fn lookup(name: &str) -> Option<ManufacturedSolution> {
    SOLUTIONS.iter().find(|s| s.name == name).copied()
}

pub fn names() -> Vec<&'static str> {
    SOLUTIONS.iter().map(|s| s.name).collect()
}
