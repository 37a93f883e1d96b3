use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::OccupancyGrid;
use super::types::{wrap_angle, Action, Bounds, Circle, Observation, Point, Pose};
use crate::error::{Error, Result};

/// Serializable world description. Validated into a [`World`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub bounds: Bounds,
    #[serde(default)]
    pub obstacles: Vec<Circle>,
    #[serde(default = "defaults::agent_radius")]
    pub agent_radius: f64,
    #[serde(default = "defaults::rays")]
    pub rays: usize,
    #[serde(default = "defaults::max_range")]
    pub max_range: f64,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    /// Designated start, checked for connectivity to `goal` when both are set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Point>,
}

mod defaults {
    pub fn agent_radius() -> f64 {
        0.25
    }
    pub fn rays() -> usize {
        32
    }
    pub fn max_range() -> f64 {
        10.0
    }
    pub fn dt() -> f64 {
        0.5
    }
}

impl WorldSpec {
    pub fn empty(width: f64, height: f64) -> Self {
        Self {
            bounds: Bounds::new(width, height),
            obstacles: Vec::new(),
            agent_radius: defaults::agent_radius(),
            rays: defaults::rays(),
            max_range: defaults::max_range(),
            dt: defaults::dt(),
            start: None,
            goal: None,
        }
    }
}

/// Result of one control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub pose: Pose,
    pub collided: bool,
}

/// Immutable, validated world.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    spec: WorldSpec,
}

impl World {
    pub fn new(spec: WorldSpec) -> Result<Self> {
        let b = spec.bounds;
        if !(b.width() > 0.0 && b.height() > 0.0) {
            return Err(Error::Construction("bounds must have positive area".into()));
        }
        if !(spec.agent_radius > 0.0) {
            return Err(Error::Construction("agent radius must be positive".into()));
        }
        if spec.rays < 8 {
            return Err(Error::Construction(format!("need at least 8 rays, got {}", spec.rays)));
        }
        if !(spec.max_range > 0.0 && spec.dt > 0.0) {
            return Err(Error::Construction("max range and dt must be positive".into()));
        }
        for (i, c) in spec.obstacles.iter().enumerate() {
            if !(c.radius > 0.0) || b.clearance(c.center()) < c.radius - 1e-9 {
                return Err(Error::Construction(format!("obstacle {i} leaves the bounds")));
            }
        }
        let world = Self { spec };
        if let (Some(s), Some(g)) = (world.spec.start, world.spec.goal) {
            for (name, p) in [("start", s), ("goal", g)] {
                if !world.is_free(p) {
                    return Err(Error::Construction(format!("{name} is not in free space")));
                }
            }
            if !world.geodesic(s, g)?.is_finite() {
                return Err(Error::Construction("start and goal are disconnected".into()));
            }
        }
        Ok(world)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: WorldSpec =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        Self::new(spec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.spec).map_err(|e| Error::json("world", e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn spec(&self) -> &WorldSpec {
        &self.spec
    }

    pub fn bounds(&self) -> Bounds {
        self.spec.bounds
    }

    pub fn obstacles(&self) -> &[Circle] {
        &self.spec.obstacles
    }

    pub fn agent_radius(&self) -> f64 {
        self.spec.agent_radius
    }

    pub fn rays(&self) -> usize {
        self.spec.rays
    }

    pub fn max_range(&self) -> f64 {
        self.spec.max_range
    }

    pub fn dt(&self) -> f64 {
        self.spec.dt
    }

    pub fn start(&self) -> Option<Point> {
        self.spec.start
    }

    pub fn goal(&self) -> Option<Point> {
        self.spec.goal
    }

    /// Signed clearance between the agent disc centred at `p` and the nearest
    /// obstacle or wall. Non-negative means collision-free.
    pub fn clearance(&self, p: Point) -> f64 {
        let r = self.spec.agent_radius;
        let walls = self.spec.bounds.clearance(p) - r;
        self.spec
            .obstacles
            .iter()
            .map(|c| p.distance(c.center()) - c.radius - r)
            .fold(walls, f64::min)
    }

    pub fn is_free(&self, p: Point) -> bool {
        self.clearance(p) >= 0.0
    }

    /// Integrates one unicycle step. A move that would intersect an obstacle
    /// or leave the bounds is cut short at the contact point.
    pub fn step(&self, pose: Pose, action: Action) -> StepOutcome {
        let action = Action::new(action.v, action.omega);
        let dt = self.spec.dt;
        let theta = wrap_angle(pose.theta + action.omega * dt);
        let dx = action.v * pose.theta.cos() * dt;
        let dy = action.v * pose.theta.sin() * dt;
        let start = pose.position();
        let hit = self.first_contact(start, dx, dy);
        match hit {
            None => StepOutcome {
                pose: Pose {
                    x: pose.x + dx,
                    y: pose.y + dy,
                    theta,
                },
                collided: false,
            },
            Some(s) => {
                let len = dx.hypot(dy);
                // Back off a hair so the resolved pose keeps clearance ≥ 0.
                let s = (s - 1e-9 / len.max(1e-12)).max(0.0);
                let mut p = Point::new(pose.x + s * dx, pose.y + s * dy);
                if !self.is_free(p) {
                    p = start;
                }
                StepOutcome {
                    pose: Pose {
                        x: p.x,
                        y: p.y,
                        theta,
                    },
                    collided: true,
                }
            }
        }
    }

    /// Fraction `s ∈ [0, 1)` of the displacement at which the swept disc first
    /// touches something, or `None` when the whole move is free.
    fn first_contact(&self, p: Point, dx: f64, dy: f64) -> Option<f64> {
        let a = dx * dx + dy * dy;
        if a == 0.0 {
            return None;
        }
        let r = self.spec.agent_radius;
        let mut best = f64::INFINITY;
        for c in &self.spec.obstacles {
            let rr = c.radius + r;
            let (ox, oy) = (p.x - c.x, p.y - c.y);
            let b = 2.0 * (dx * ox + dy * oy);
            if b >= 0.0 {
                continue; // moving away or tangentially
            }
            let c0 = ox * ox + oy * oy - rr * rr;
            if c0 <= 0.0 {
                best = 0.0;
                continue;
            }
            let disc = b * b - 4.0 * a * c0;
            if disc < 0.0 {
                continue;
            }
            let s = (-b - disc.sqrt()) / (2.0 * a);
            if s < best {
                best = s;
            }
        }
        let b = self.spec.bounds;
        let walls = [
            (dx, p.x, b.min_x + r, b.max_x - r),
            (dy, p.y, b.min_y + r, b.max_y - r),
        ];
        for (d, x, lo, hi) in walls {
            if d < 0.0 {
                best = best.min(((lo - x) / d).max(0.0));
            } else if d > 0.0 {
                best = best.min(((hi - x) / d).max(0.0));
            }
        }
        (best < 1.0).then_some(best)
    }

    /// Ray scan from the agent centre.
    pub fn observe(&self, pose: Pose) -> Observation {
        let k = self.spec.rays;
        let rays = (0..k)
            .map(|i| {
                let bearing = pose.theta + 2.0 * PI * i as f64 / k as f64;
                self.cast(pose.position(), bearing) / self.spec.max_range
            })
            .collect();
        Observation::new(rays)
    }

    /// Distance along `bearing` to the first obstacle or wall, capped at the
    /// sensor range.
    pub fn cast(&self, origin: Point, bearing: f64) -> f64 {
        let (ux, uy) = (bearing.cos(), bearing.sin());
        let mut best = self.spec.max_range;
        for c in &self.spec.obstacles {
            let (ox, oy) = (origin.x - c.x, origin.y - c.y);
            let b = ux * ox + uy * oy;
            let c0 = ox * ox + oy * oy - c.radius * c.radius;
            let disc = b * b - c0;
            if disc < 0.0 {
                continue;
            }
            let root = disc.sqrt();
            // Nearer intersection first; a tangent ray has both roots equal.
            let t = if -b - root >= 0.0 { -b - root } else { -b + root };
            if t >= 0.0 && t < best {
                best = t;
            }
        }
        let b = self.spec.bounds;
        for (u, x, lo, hi) in [(ux, origin.x, b.min_x, b.max_x), (uy, origin.y, b.min_y, b.max_y)] {
            let t = if u > 0.0 {
                (hi - x) / u
            } else if u < 0.0 {
                (lo - x) / u
            } else {
                f64::INFINITY
            };
            if t >= 0.0 && t < best {
                best = t;
            }
        }
        best
    }

    /// Shortest collision-free path length for the agent centre between two
    /// free points, or `f64::INFINITY` when they are disconnected.
    pub fn geodesic(&self, from: Point, to: Point) -> Result<f64> {
        for p in [from, to] {
            if !self.is_free(p) {
                return Err(Error::Contract(format!(
                    "point ({:.3}, {:.3}) is not in free space",
                    p.x, p.y
                )));
            }
        }
        if from == to {
            return Ok(0.0);
        }
        Ok(OccupancyGrid::for_world(self).path_length(self, from, to))
    }

    /// Uniformly samples a collision-free pose.
    pub fn sample_free_pose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Pose> {
        let b = self.spec.bounds;
        for _ in 0..10_000 {
            let p = Point::new(rng.gen_range(b.min_x..b.max_x), rng.gen_range(b.min_y..b.max_y));
            if self.is_free(p) {
                return Ok(Pose::new(p.x, p.y, rng.gen_range(-PI..PI)));
            }
        }
        Err(Error::Construction("no free space found".into()))
    }

    /// Copy of the world with everything shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<World> {
        let mut spec = self.spec.clone();
        spec.bounds.min_x += dx;
        spec.bounds.max_x += dx;
        spec.bounds.min_y += dy;
        spec.bounds.max_y += dy;
        for c in &mut spec.obstacles {
            c.x += dx;
            c.y += dy;
        }
        let shift = |p: Point| Point::new(p.x + dx, p.y + dy);
        spec.start = spec.start.map(shift);
        spec.goal = spec.goal.map(shift);
        World::new(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(w: f64, h: f64) -> World {
        World::new(WorldSpec::empty(w, h)).unwrap()
    }

    #[test]
    fn standing_still_changes_nothing() {
        let w = empty(10.0, 10.0);
        let pose = Pose::new(5.0, 5.0, 0.3);
        let out = w.step(pose, Action::STOP);
        assert_eq!(out.pose, pose);
        assert!(!out.collided);
    }

    #[test]
    fn forward_motion_integrates_heading() {
        let w = empty(10.0, 10.0);
        let out = w.step(Pose::new(5.0, 5.0, 0.0), Action::new(1.0, 0.0));
        assert!((out.pose.x - 5.5).abs() < 1e-12);
        assert_eq!(out.pose.y, 5.0);
        let turned = w.step(Pose::new(5.0, 5.0, 0.0), Action::new(0.0, 1.0));
        assert!((turned.pose.theta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stops_at_contact_with_wall_ahead() {
        // Agent surface 0.3 m from an obstacle directly ahead.
        let mut spec = WorldSpec::empty(10.0, 10.0);
        spec.obstacles.push(Circle { x: 7.0, y: 5.0, radius: 1.0 });
        let w = World::new(spec).unwrap();
        let x0 = 7.0 - 1.0 - 0.3 - w.agent_radius();
        let out = w.step(Pose::new(x0, 5.0, 0.0), Action::new(1.0, 0.0));
        assert!(out.collided);
        assert!((out.pose.x - (x0 + 0.3)).abs() < 1e-6, "{}", out.pose.x);
        assert!(w.clearance(out.pose.position()) >= 0.0);

        // Same against the boundary.
        let x0 = 10.0 - 0.3 - w.agent_radius();
        let out = w.step(Pose::new(x0, 2.0, 0.0), Action::new(1.0, 0.0));
        assert!(out.collided);
        assert!((out.pose.x - (x0 + 0.3)).abs() < 1e-6);
        // Pushing again does not move and still reports the collision.
        let again = w.step(out.pose, Action::new(1.0, 0.0));
        assert!(again.collided);
        assert!((again.pose.x - out.pose.x).abs() < 1e-6);
    }

    #[test]
    fn empty_world_far_from_walls_sees_nothing() {
        let w = empty(40.0, 40.0);
        let obs = w.observe(Pose::new(20.0, 20.0, 0.7));
        assert_eq!(obs.len(), 32);
        assert!(obs.rays().iter().all(|&r| r == 1.0));
    }

    #[test]
    fn wall_five_meters_ahead() {
        let w = empty(25.0, 40.0);
        let obs = w.observe(Pose::new(20.0, 20.0, 0.0));
        assert!((obs.rays()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn geodesic_trivial_cases() {
        let w = empty(10.0, 10.0);
        let p = Point::new(1.0, 1.0);
        assert_eq!(w.geodesic(p, p).unwrap(), 0.0);
        let d = w.geodesic(Point::new(1.0, 1.0), Point::new(4.0, 5.0)).unwrap();
        assert!(d >= 5.0 - 1e-9 && d <= 5.0 * 1.05, "{d}");
    }

    #[test]
    fn geodesic_rejects_points_in_obstacles() {
        let mut spec = WorldSpec::empty(10.0, 10.0);
        spec.obstacles.push(Circle { x: 5.0, y: 5.0, radius: 1.0 });
        let w = World::new(spec).unwrap();
        assert!(matches!(
            w.geodesic(Point::new(5.0, 5.0), Point::new(1.0, 1.0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn construction_validates() {
        let mut spec = WorldSpec::empty(10.0, 10.0);
        spec.rays = 4;
        assert!(World::new(spec).is_err());
        let mut spec = WorldSpec::empty(10.0, 10.0);
        spec.obstacles.push(Circle { x: 9.8, y: 5.0, radius: 1.0 });
        assert!(World::new(spec).is_err());
        let mut spec = WorldSpec::empty(10.0, 10.0);
        spec.agent_radius = 0.0;
        assert!(World::new(spec).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let mut spec = WorldSpec::empty(12.0, 8.0);
        spec.obstacles.push(Circle { x: 3.0, y: 4.0, radius: 0.7 });
        spec.start = Some(Point::new(1.0, 1.0));
        let text = serde_json::to_string(&spec).unwrap();
        let back: WorldSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let minimal: WorldSpec =
            serde_json::from_str(r#"{"bounds":{"min_x":0,"min_y":0,"max_x":5,"max_y":5}}"#).unwrap();
        assert_eq!(minimal.rays, 32);
        assert_eq!(minimal.dt, 0.5);
    }
}
