use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Largest commanded linear velocity, m/s.
pub const V_MAX: f64 = 1.0;
/// Largest commanded angular velocity magnitude, rad/s.
pub const OMEGA_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Circle {
    pub fn center(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            min_x: 0.0,
            min_y: 0.0,
            max_x: width,
            max_y: height,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// Distance from `p` to the nearest wall, negative when outside.
    pub fn clearance(&self, p: Point) -> f64 {
        (p.x - self.min_x)
            .min(self.max_x - p.x)
            .min(p.y - self.min_y)
            .min(self.max_y - p.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Ground-truth agent state. Never shown to the agent itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Velocity command, clamped to `[0, V_MAX] × [−OMEGA_MAX, OMEGA_MAX]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub v: f64,
    pub omega: f64,
}

impl Action {
    pub fn new(v: f64, omega: f64) -> Self {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, V_MAX) };
        let omega = if omega.is_nan() {
            0.0
        } else {
            omega.clamp(-OMEGA_MAX, OMEGA_MAX)
        };
        Self { v, omega }
    }

    pub const STOP: Action = Action { v: 0.0, omega: 0.0 };
}

/// Egocentric ray scan: normalized hit distances in `[0, 1]` along evenly
/// spaced bearings, ray 0 pointing along the heading, counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(Vec<f64>);

impl Observation {
    /// Wraps raw ray values, clamping them into `[0, 1]`.
    pub fn new(rays: Vec<f64>) -> Self {
        Self(rays.into_iter().map(|r| r.clamp(0.0, 1.0)).collect())
    }

    pub fn rays(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
