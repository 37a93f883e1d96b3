//! Self-supervised dataset generation: time-correlated random-walk
//! collection with collision backup, segmentation, and hindsight relabeling.

mod collect;
mod dataset;
mod relabel;

pub use collect::{backup_turn, collect, random_walk_action, CollectConfig, Trajectory, TrajectoryStep};
pub use dataset::{Dataset, Provenance, Quadruple};
pub use relabel::relabel;
