//! Deterministic 2D world: unicycle agent, circular obstacles, ray-scan
//! sensing and an occupancy-grid geodesic used only for evaluation.

mod generate;
mod grid;
mod types;
mod world;

pub use generate::{perturb_world, RandomWorldConfig};
pub use grid::OccupancyGrid;
pub use types::{wrap_angle, Action, Bounds, Circle, Observation, Point, Pose, OMEGA_MAX, V_MAX};
pub use world::{StepOutcome, World, WorldSpec};
