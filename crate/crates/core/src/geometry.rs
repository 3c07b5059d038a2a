//! Closed parametric boundary curves: circles, ellipses and star-shaped
//! domains, with their differential frame (tangent, outward normal,
//! curvature), arc-length parameterization and quasi-uniform control points.
//!
//! All curves are star-shaped about their center and traversed
//! counterclockwise, so the outward normal is the tangent rotated by -90
//! degrees and points of the plane are classified by radial comparison.

use std::f64::consts::TAU;

use crate::{Error, Result};

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// z-component of the cross product `self x other`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, c: f64) -> Vec2 {
        Vec2::new(self.x * c, self.y * c)
    }
}

/// Which side of the boundary a point lies on. Points exactly on the curve
/// count as interior (one-sided limits are taken from inside the domain).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// Supported curve families.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    Circle {
        radius: f64,
    },
    Ellipse {
        semi_x: f64,
        semi_y: f64,
    },
    /// Polar curve rho(theta) = radius * (1 + amplitude * sin(folds * (theta - rotation))).
    Star {
        radius: f64,
        amplitude: f64,
        folds: u32,
        rotation: f64,
    },
}

/// Position, tangent, outward normal and signed curvature at a boundary point.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFrame {
    pub point: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
}

const TABLE_SIZE: usize = 4096;
const MAX_TABLE_SIZE: usize = 65536;

/// A closed smooth boundary curve with a precomputed arc-length table.
#[derive(Debug, Clone)]
pub struct ParametricBoundary {
    kind: CurveKind,
    center: Vec2,
    /// Cumulative arc length at parameters `t_i = i / n`, length `n + 1`.
    arc_table: Vec<f64>,
    /// Speed `|dgamma/dt|` at the table parameters.
    speed_table: Vec<f64>,
    perimeter: f64,
}

/// Build a boundary curve, validating shape parameters and populating the
/// arc-length table by per-interval Simpson quadrature of the speed. The
/// table is refined until the perimeter is converged to 1e-10 relative.
pub fn build_boundary(kind: CurveKind, center: Vec2) -> Result<ParametricBoundary> {
    match &kind {
        CurveKind::Circle { radius } => {
            if !(*radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "circle radius must be positive, got {radius}"
                )));
            }
        }
        CurveKind::Ellipse { semi_x, semi_y } => {
            if !(*semi_x > 0.0 && *semi_y > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "ellipse semi-axes must be positive, got ({semi_x}, {semi_y})"
                )));
            }
        }
        CurveKind::Star {
            radius,
            amplitude,
            folds,
            ..
        } => {
            if !(*radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "star radius must be positive, got {radius}"
                )));
            }
            if !(*amplitude >= 0.0 && *amplitude < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "star amplitude must lie in [0, 1), got {amplitude}"
                )));
            }
            if *folds == 0 {
                return Err(Error::InvalidParameter("star fold count must be positive".into()));
            }
            if *amplitude * f64::from(*folds) >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "star amplitude * folds must stay below 1, got {}",
                    amplitude * f64::from(*folds)
                )));
            }
        }
    }

    let mut boundary = ParametricBoundary {
        kind,
        center,
        arc_table: Vec::new(),
        speed_table: Vec::new(),
        perimeter: 0.0,
    };

    let mut n = TABLE_SIZE;
    boundary.fill_table(n)?;
    loop {
        let old = boundary.perimeter;
        if n >= MAX_TABLE_SIZE {
            break;
        }
        n *= 2;
        boundary.fill_table(n)?;
        if (boundary.perimeter - old).abs() < 1e-10 * boundary.perimeter {
            break;
        }
    }

    let closure = (boundary.position(0.0) - boundary.position(1.0)).norm();
    debug_assert!(closure <= 1e-12 * boundary.perimeter);
    Ok(boundary)
}

impl ParametricBoundary {
    /// Total perimeter of the curve.
    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    fn fill_table(&mut self, n: usize) -> Result<()> {
        let dt = 1.0 / n as f64;
        let mut arc = Vec::with_capacity(n + 1);
        let mut speeds = Vec::with_capacity(n + 1);
        arc.push(0.0);
        let mut prev_speed = self.velocity(0.0).norm();
        speeds.push(prev_speed);
        let mut s = 0.0;
        for i in 0..n {
            let t0 = i as f64 * dt;
            let mid = self.velocity(t0 + 0.5 * dt).norm();
            let next = self.velocity(t0 + dt).norm();
            if prev_speed <= 0.0 || mid <= 0.0 {
                return Err(Error::InvalidParameter(
                    "degenerate curve: parameterization speed vanishes".into(),
                ));
            }
            s += dt / 6.0 * (prev_speed + 4.0 * mid + next);
            arc.push(s);
            speeds.push(next);
            prev_speed = next;
        }
        self.perimeter = s;
        self.arc_table = arc;
        self.speed_table = speeds;
        Ok(())
    }

    /// Polar radius of the curve at angle `theta` (measured from the center).
    pub fn polar_radius(&self, theta: f64) -> f64 {
        match &self.kind {
            CurveKind::Circle { radius } => *radius,
            CurveKind::Ellipse { semi_x, semi_y } => {
                let (s, c) = theta.sin_cos();
                semi_x * semi_y / ((semi_y * c).powi(2) + (semi_x * s).powi(2)).sqrt()
            }
            CurveKind::Star {
                radius,
                amplitude,
                folds,
                rotation,
            } => radius * (1.0 + amplitude * (f64::from(*folds) * (theta - rotation)).sin()),
        }
    }

    /// Curve position at parameter `t` in [0, 1).
    pub fn position(&self, t: f64) -> Vec2 {
        let theta = TAU * t;
        let (s, c) = theta.sin_cos();
        let rho = self.polar_radius(theta);
        self.center + Vec2::new(rho * c, rho * s)
    }

    /// First derivative with respect to `t`.
    pub fn velocity(&self, t: f64) -> Vec2 {
        let theta = TAU * t;
        let (s, c) = theta.sin_cos();
        let (rho, drho) = self.polar_radius_deriv(theta);
        Vec2::new(drho * c - rho * s, drho * s + rho * c) * TAU
    }

    /// Second derivative with respect to `t`.
    pub fn acceleration(&self, t: f64) -> Vec2 {
        let theta = TAU * t;
        let (s, c) = theta.sin_cos();
        let (rho, drho) = self.polar_radius_deriv(theta);
        let ddrho = self.polar_radius_second_deriv(theta);
        let x = ddrho * c - 2.0 * drho * s - rho * c;
        let y = ddrho * s + 2.0 * drho * c - rho * s;
        Vec2::new(x, y) * (TAU * TAU)
    }

    fn polar_radius_deriv(&self, theta: f64) -> (f64, f64) {
        match &self.kind {
            CurveKind::Circle { radius } => (*radius, 0.0),
            CurveKind::Ellipse { semi_x, semi_y } => {
                let (s, c) = theta.sin_cos();
                let q = (semi_y * c).powi(2) + (semi_x * s).powi(2);
                let rho = semi_x * semi_y / q.sqrt();
                // dq/dtheta = 2 s c (a^2 - b^2)
                let dq = 2.0 * s * c * (semi_x * semi_x - semi_y * semi_y);
                (rho, -0.5 * semi_x * semi_y * dq / q.powf(1.5))
            }
            CurveKind::Star {
                radius,
                amplitude,
                folds,
                rotation,
            } => {
                let m = f64::from(*folds);
                let arg = m * (theta - rotation);
                (
                    radius * (1.0 + amplitude * arg.sin()),
                    radius * amplitude * m * arg.cos(),
                )
            }
        }
    }

    fn polar_radius_second_deriv(&self, theta: f64) -> f64 {
        match &self.kind {
            CurveKind::Circle { .. } => 0.0,
            CurveKind::Ellipse { semi_x, semi_y } => {
                // Differentiate rho' = -a b q' / (2 q^{3/2}) once more.
                let (s, c) = theta.sin_cos();
                let d = semi_x * semi_x - semi_y * semi_y;
                let q = (semi_y * c).powi(2) + (semi_x * s).powi(2);
                let dq = 2.0 * s * c * d;
                let ddq = 2.0 * (c * c - s * s) * d;
                let ab = semi_x * semi_y;
                -0.5 * ab * (ddq / q.powf(1.5) - 1.5 * dq * dq / q.powf(2.5))
            }
            CurveKind::Star {
                radius,
                amplitude,
                folds,
                rotation,
            } => {
                let m = f64::from(*folds);
                let arg = m * (theta - rotation);
                -radius * amplitude * m * m * arg.sin()
            }
        }
    }

    /// Arc length at parameter `t` in [0, 1], from the table plus local
    /// Gauss-Legendre quadrature inside the bracketing interval.
    pub fn arc_length_at(&self, t: f64) -> f64 {
        let t = t.rem_euclid(1.0);
        let n = self.arc_table.len() - 1;
        let idx = ((t * n as f64) as usize).min(n - 1);
        let t0 = idx as f64 / n as f64;
        self.arc_table[idx] + self.quad_segment(t0, t)
    }

    // 3-point Gauss-Legendre on [a, b]; exact enough at table resolution.
    fn quad_segment(&self, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let r = (0.6_f64).sqrt();
        let w0 = 8.0 / 9.0;
        let w1 = 5.0 / 9.0;
        half
            * (w0 * self.velocity(mid).norm()
                + w1 * self.velocity(mid - half * r).norm()
                + w1 * self.velocity(mid + half * r).norm())
    }

    /// Invert the arc-length map: parameter `t` with `arc_length_at(t) = s`.
    pub fn parameter_at_arc_length(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.perimeter);
        let n = self.arc_table.len() - 1;
        // Binary search for the bracketing table interval.
        let mut lo = 0;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.arc_table[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t_lo = lo as f64 / n as f64;
        let t_hi = hi as f64 / n as f64;
        // Linear seed, then Newton on s(t) - s with exact derivative |gamma'|.
        let frac = (s - self.arc_table[lo])
            / (self.arc_table[hi] - self.arc_table[lo]).max(f64::MIN_POSITIVE);
        let mut t = t_lo + frac * (t_hi - t_lo);
        for _ in 0..8 {
            let f = self.arc_table[lo] + self.quad_segment(t_lo, t) - s;
            let speed = self.velocity(t).norm();
            let step = f / speed;
            t -= step;
            t = t.clamp(t_lo - 0.5 / n as f64, t_hi + 0.5 / n as f64);
            if step.abs() < 1e-15 {
                break;
            }
        }
        t.rem_euclid(1.0)
    }

    /// Differential frame at arc length `s` (wraps modulo the perimeter).
    pub fn frame_at(&self, s: f64) -> BoundaryFrame {
        let t = self.parameter_at_arc_length(s);
        self.frame_at_parameter(t)
    }

    /// Differential frame at curve parameter `t`.
    pub fn frame_at_parameter(&self, t: f64) -> BoundaryFrame {
        let v = self.velocity(t);
        let a = self.acceleration(t);
        let speed = v.norm();
        let tangent = v * (1.0 / speed);
        // Counterclockwise curve: outward normal is the tangent rotated -90 degrees.
        let normal = Vec2::new(tangent.y, -tangent.x);
        let curvature = v.cross(a) / (speed * speed * speed);
        BoundaryFrame {
            point: self.position(t),
            tangent,
            normal,
            curvature,
        }
    }

    /// Classify a point relative to the enclosed domain. Points exactly on
    /// the curve are interior.
    pub fn side_of(&self, p: Vec2) -> Side {
        if self.signed_radial_distance(p) <= 0.0 {
            Side::Interior
        } else {
            Side::Exterior
        }
    }

    /// Radial defect `|p - center| - rho(theta_p)`; negative inside, zero on
    /// the curve. Continuous away from the center, which is always interior.
    pub fn signed_radial_distance(&self, p: Vec2) -> f64 {
        let d = p - self.center;
        let r = d.norm();
        if r == 0.0 {
            return -self.polar_radius(0.0);
        }
        let theta = d.y.atan2(d.x);
        r - self.polar_radius(theta)
    }

    /// Curve parameter of the radial projection of `p` onto the curve. For a
    /// point already on the curve this recovers its parameter.
    pub fn parameter_of_point(&self, p: Vec2) -> f64 {
        let d = p - self.center;
        d.y.atan2(d.x).rem_euclid(TAU) / TAU
    }
}

/// One control point on the boundary with its frame data.
#[derive(Debug, Clone, Copy)]
pub struct ControlPoint {
    pub position: Vec2,
    pub arc_length: f64,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
}

/// Quasi-uniform control point discretization of a boundary.
#[derive(Debug, Clone)]
pub struct ControlPointSet {
    points: Vec<ControlPoint>,
    perimeter: f64,
}

impl ControlPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, m: usize) -> &ControlPoint {
        &self.points[m]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ControlPoint> {
        self.points.iter()
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// Arc lengths of all control points, in order.
    pub fn arc_lengths(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.arc_length).collect()
    }
}

/// Place control points at equal arc-length increments `L / M` with
/// `M = round(L / spacing_target)`. Fails if fewer than 8 points result.
pub fn discretize_boundary(
    boundary: &ParametricBoundary,
    spacing_target: f64,
) -> Result<ControlPointSet> {
    if !(spacing_target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "control point spacing must be positive, got {spacing_target}"
        )));
    }
    let perimeter = boundary.perimeter();
    let m = (perimeter / spacing_target).round() as usize;
    if m < 8 {
        return Err(Error::TooCoarse(m));
    }
    let ds = perimeter / m as f64;
    let points = (0..m)
        .map(|k| {
            let s = k as f64 * ds;
            let frame = boundary.frame_at(s);
            ControlPoint {
                position: frame.point,
                arc_length: s,
                tangent: frame.tangent,
                normal: frame.normal,
                curvature: frame.curvature,
            }
        })
        .collect();
    Ok(ControlPointSet { points, perimeter })
}
