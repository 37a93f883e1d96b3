//! Metrics, ablation variants, perturbation scenarios and experiment runs.

mod experiment;
mod metrics;
pub mod suite;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{explore, goal_navigate, ExploreConfig, FrontierMode, NavigateConfig, Session};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::{Point, Pose, World};

pub use crate::sim::perturb_world;
pub use experiment::{
    aggregate, load_runs, read_runs_dir, run_experiment, write_report, AggregateRow, ExperimentConfig, WorldEntry,
};
pub use metrics::{
    coverage, coverage_curve, median, optimal_steps, sct, spearman, CoverageMap, COVERAGE_CELL, COVERAGE_RADIUS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Recon,
    Reactive,
    RandomActions,
    Vanilla,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Recon, Method::Reactive, Method::RandomActions, Method::Vanilla];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Recon => "recon",
            Method::Reactive => "reactive",
            Method::RandomActions => "random-actions",
            Method::Vanilla => "vanilla",
        }
    }

    /// Whether the method expects a model trained without the KL term.
    pub fn needs_unregularized_model(self) -> bool {
        self == Method::Vanilla
    }

    /// Exploration settings for this variant on top of `base`.
    pub fn explore_config(self, base: &ExploreConfig) -> ExploreConfig {
        let mut cfg = base.clone();
        match self {
            Method::Recon => {}
            Method::Reactive => cfg.use_graph = false,
            Method::RandomActions => cfg.frontier = FrontierMode::RandomActions,
            Method::Vanilla => cfg.beta = 0.0,
        }
        cfg
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Budgets and thresholds shared by every method in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub explore: ExploreConfig,
    pub navigate: NavigateConfig,
    /// Heading of the agent at the start and of the goal snapshot.
    pub start_heading: f64,
    pub goal_heading: f64,
    /// Coverage curve sampling interval, steps.
    pub coverage_every: usize,
    pub coverage_radius: f64,
    /// Extra obstacles added between exploration and navigation.
    pub perturb_obstacles: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            explore: ExploreConfig::default(),
            navigate: NavigateConfig::default(),
            start_heading: 0.0,
            goal_heading: 0.0,
            coverage_every: 10,
            coverage_radius: COVERAGE_RADIUS,
            perturb_obstacles: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub seed: u64,
    pub world: String,
    pub discovered: bool,
    /// Steps to discovery, or the whole budget when the goal was not found.
    pub exploration_steps: usize,
    pub navigated: bool,
    pub navigation_steps: Option<usize>,
    pub optimal_steps: usize,
    pub sct: f64,
    pub coverage: Vec<(usize, f64)>,
    pub branches: BTreeMap<String, usize>,
    pub graph_vertices: usize,
    pub replans: usize,
    pub config: RunConfig,
}

fn start_goal(world: &World) -> Result<(Point, Point)> {
    match (world.start(), world.goal()) {
        (Some(s), Some(g)) => Ok((s, g)),
        _ => Err(Error::Invalid("world needs a start and a goal for evaluation".into())),
    }
}

/// Explores `world` from its start with `method`, then, if the goal was found,
/// returns to the start and navigates to the goal again.
pub fn run_method(
    method: Method,
    world: &World,
    world_id: &str,
    model: &ModelParams,
    cfg: &RunConfig,
    seed: u64,
) -> Result<RunReport> {
    if method.needs_unregularized_model() != (model.beta == 0.0) {
        return Err(Error::Contract(format!(
            "method {method} cannot run with a model trained at beta = {}",
            model.beta
        )));
    }
    let (start, goal) = start_goal(world)?;
    let start_pose = Pose::new(start.x, start.y, cfg.start_heading);
    let goal_obs = world.observe(Pose::new(goal.x, goal.y, cfg.goal_heading));
    let t_optimal = optimal_steps(world.geodesic(start, goal)?, world.dt());

    let mut ecfg = method.explore_config(&cfg.explore);
    ecfg.seed = seed;
    let mut session = Session::new(world, start_pose, ecfg.budget)?;
    let result = explore(&mut session, model, &goal_obs, goal, &ecfg)?;
    let coverage = coverage_curve(&result.trace, world, cfg.coverage_radius, cfg.coverage_every);

    let nav_world = perturb_world(world, cfg.perturb_obstacles, seed ^ 0xb10c, start, goal, 1.0)?;
    let (mut navigated, mut navigation_steps, mut replans) = (false, None, 0);
    if result.discovered {
        let mut nav = Session::new(&nav_world, start_pose, cfg.navigate.budget)?;
        if method == Method::Reactive {
            let mut rcfg = ecfg.clone();
            rcfg.budget = cfg.navigate.budget;
            rcfg.finetune_epochs = 0;
            let r = explore(&mut nav, &result.model, &goal_obs, goal, &rcfg)?;
            navigated = r.discovered;
            navigation_steps = Some(r.steps);
        } else {
            let r = goal_navigate(&mut nav, &result.model, &result.graph, &goal_obs, goal, &cfg.navigate)?;
            navigated = r.success;
            navigation_steps = Some(r.steps);
            replans = r.replans;
        }
    }
    Ok(RunReport {
        method,
        seed,
        world: world_id.to_string(),
        discovered: result.discovered,
        exploration_steps: result.steps,
        navigated,
        navigation_steps,
        optimal_steps: t_optimal,
        sct: sct(navigated, navigation_steps.unwrap_or(0), t_optimal),
        coverage,
        branches: result.branch_histogram(),
        graph_vertices: result.graph.len(),
        replans,
        config: cfg.clone(),
    })
}
