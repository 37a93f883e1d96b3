use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::{Bounds, Circle, Point};
use super::world::{World, WorldSpec};
use crate::error::{Error, Result};

const TRIES_PER_OBSTACLE: usize = 200;
const WORLD_RETRIES: usize = 20;

/// Recipe for seeded random worlds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomWorldConfig {
    pub width: f64,
    pub height: f64,
    pub obstacles: usize,
    pub min_radius: f64,
    pub max_radius: f64,
    #[serde(default)]
    pub start: Option<Point>,
    #[serde(default)]
    pub goal: Option<Point>,
    /// Free margin kept around the start and goal, beyond the agent radius.
    #[serde(default = "default_keep_clear")]
    pub keep_clear: f64,
    /// Reject worlds whose start–goal geodesic is shorter than this.
    #[serde(default)]
    pub min_goal_geodesic: Option<f64>,
    #[serde(default = "default_agent_radius")]
    pub agent_radius: f64,
    #[serde(default = "default_rays")]
    pub rays: usize,
    #[serde(default = "default_max_range")]
    pub max_range: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_keep_clear() -> f64 {
    1.0
}
fn default_agent_radius() -> f64 {
    0.25
}
fn default_rays() -> usize {
    32
}
fn default_max_range() -> f64 {
    10.0
}
fn default_dt() -> f64 {
    0.5
}

impl RandomWorldConfig {
    /// `size × size` meters with `obstacles` discs of radius 0.5–1.5 m.
    pub fn square(size: f64, obstacles: usize) -> Self {
        Self::rect(size, size, obstacles)
    }

    pub fn rect(width: f64, height: f64, obstacles: usize) -> Self {
        Self {
            width,
            height,
            obstacles,
            min_radius: 0.5,
            max_radius: 1.5,
            start: None,
            goal: None,
            keep_clear: default_keep_clear(),
            min_goal_geodesic: None,
            agent_radius: default_agent_radius(),
            rays: default_rays(),
            max_range: default_max_range(),
            dt: default_dt(),
        }
    }

    pub fn with_route(mut self, start: Point, goal: Point) -> Self {
        self.start = Some(start);
        self.goal = Some(goal);
        self
    }

    fn base_spec(&self) -> WorldSpec {
        WorldSpec {
            bounds: Bounds::new(self.width, self.height),
            obstacles: Vec::new(),
            agent_radius: self.agent_radius,
            rays: self.rays,
            max_range: self.max_range,
            dt: self.dt,
            start: self.start,
            goal: self.goal,
        }
    }

    /// Builds a validated world; identical seeds give identical worlds.
    pub fn generate(&self, seed: u64) -> Result<World> {
        if !(self.min_radius > 0.0 && self.max_radius >= self.min_radius) {
            return Err(Error::Construction("invalid obstacle radius range".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors: Vec<Point> = self.start.iter().chain(self.goal.iter()).copied().collect();
        for _ in 0..WORLD_RETRIES {
            let base = World::new(self.base_spec())?;
            let world = match add_obstacles(
                &base,
                self.obstacles,
                (self.min_radius, self.max_radius),
                &anchors,
                self.keep_clear,
                &mut rng,
            ) {
                Ok(w) => w,
                Err(_) => continue,
            };
            if let (Some(min), Some(s), Some(g)) = (self.min_goal_geodesic, self.start, self.goal) {
                if world.geodesic(s, g)? < min {
                    continue;
                }
            }
            return Ok(world);
        }
        Err(Error::Construction(format!(
            "could not place {} obstacles after {WORLD_RETRIES} attempts",
            self.obstacles
        )))
    }
}

/// Adds `count` rejection-sampled obstacles to `world`, keeping `anchors`
/// clear and, when the world has a designated start and goal, connected.
pub(crate) fn add_obstacles<R: Rng + ?Sized>(
    world: &World,
    count: usize,
    radius: (f64, f64),
    anchors: &[Point],
    keep_clear: f64,
    rng: &mut R,
) -> Result<World> {
    let mut spec = world.spec().clone();
    let b = spec.bounds;
    for placed in 0..count {
        let mut accepted = false;
        for _ in 0..TRIES_PER_OBSTACLE {
            let r = if radius.1 > radius.0 {
                rng.gen_range(radius.0..=radius.1)
            } else {
                radius.0
            };
            if 2.0 * r >= b.width() || 2.0 * r >= b.height() {
                break;
            }
            let c = Circle {
                x: rng.gen_range(b.min_x + r..b.max_x - r),
                y: rng.gen_range(b.min_y + r..b.max_y - r),
                radius: r,
            };
            let blocks_anchor = anchors
                .iter()
                .any(|a| a.distance(c.center()) < r + spec.agent_radius + keep_clear);
            if blocks_anchor {
                continue;
            }
            let mut trial = spec.clone();
            trial.obstacles.push(c);
            if let Ok(w) = World::new(trial.clone()) {
                spec = w.spec().clone();
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::Construction(format!(
                "could not place obstacle {} of {count}",
                placed + 1
            )));
        }
    }
    World::new(spec)
}

/// Adds `extra` connectivity-preserving obstacles away from `start` and the
/// goal disc. `extra == 0` returns an identical world.
pub fn perturb_world(
    world: &World,
    extra: usize,
    seed: u64,
    start: Point,
    goal: Point,
    keep_clear: f64,
) -> Result<World> {
    if extra == 0 {
        return Ok(world.clone());
    }
    let mut spec = world.spec().clone();
    spec.start = Some(start);
    spec.goal = Some(goal);
    let anchored = World::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perturbed = add_obstacles(&anchored, extra, (0.5, 1.2), &[start, goal], keep_clear, &mut rng)?;
    let mut spec = perturbed.spec().clone();
    spec.start = world.start();
    spec.goal = world.goal();
    World::new(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_obstacles_gives_empty_world() {
        let w = RandomWorldConfig::square(10.0, 0).generate(1).unwrap();
        assert!(w.obstacles().is_empty());
    }

    #[test]
    fn same_seed_same_world() {
        let cfg = RandomWorldConfig::square(20.0, 12);
        assert_eq!(cfg.generate(7).unwrap(), cfg.generate(7).unwrap());
        assert_ne!(cfg.generate(7).unwrap(), cfg.generate(8).unwrap());
    }

    #[test]
    fn seeded_world_keeps_route_connected() {
        let cfg = RandomWorldConfig::square(20.0, 12)
            .with_route(Point::new(1.5, 1.5), Point::new(18.5, 18.5));
        let w = cfg.generate(3).unwrap();
        assert_eq!(w.obstacles().len(), 12);
        let d = w.geodesic(Point::new(1.5, 1.5), Point::new(18.5, 18.5)).unwrap();
        assert!(d.is_finite() && d >= 17.0 * 2f64.sqrt());
    }

    #[test]
    fn unsatisfiable_spec_fails() {
        let mut cfg = RandomWorldConfig::square(3.0, 5);
        cfg.min_radius = 2.0;
        cfg.max_radius = 2.0;
        assert!(matches!(cfg.generate(0), Err(Error::Construction(_))));
    }

    #[test]
    fn perturbation_is_reproducible_and_connected() {
        let (s, g) = (Point::new(2.0, 2.0), Point::new(18.0, 18.0));
        let w = RandomWorldConfig::square(20.0, 8).with_route(s, g).generate(4).unwrap();
        assert_eq!(perturb_world(&w, 0, 9, s, g, 2.0).unwrap(), w);
        let p1 = perturb_world(&w, 3, 9, s, g, 2.0).unwrap();
        let p2 = perturb_world(&w, 3, 9, s, g, 2.0).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.obstacles().len(), w.obstacles().len() + 3);
        assert!(p1.geodesic(s, g).unwrap().is_finite());
    }
}
