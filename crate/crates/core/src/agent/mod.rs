//! Control loops: fixed-horizon latent-goal legs, frontier exploration with
//! online fine-tuning, and graph-based navigation back to a discovered goal.

mod explore;
mod leg;
mod navigate;

use serde::{Deserialize, Serialize};

use crate::sim::{Action, Observation, Point, Pose, StepOutcome, World};

pub use explore::{explore, Branch, Decision, ExploreResult, ExploreSummary};
pub use leg::{back_off, random_burst, subgoal_navigate, subgoal_navigate_watching, GoalWatch, Leg, LegMode};
pub use navigate::{goal_navigate, NavigateConfig, NavigateResult};

/// What the agent does when it reaches the frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrontierMode {
    /// Roll out a latent goal drawn from the prior.
    PriorSample,
    /// Execute a time-correlated random action burst instead.
    RandomActions,
    /// Keep heading for the least-visited neighbour (test harness only).
    FollowFrontier,
}

/// Density used by the goal-feasibility test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityRule {
    /// Geometric mean of the per-dimension prior densities.
    PerDimension,
    /// Full D-dimensional prior density.
    Joint,
}

impl FeasibilityRule {
    pub fn density(self, z: ndarray::ArrayView1<'_, f64>) -> f64 {
        match self {
            FeasibilityRule::PerDimension => crate::model::per_dim_prior_density(z),
            FeasibilityRule::Joint => crate::model::prior_density(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExploreConfig {
    /// Identification threshold, steps: goal reached, frontier reached, vertex dedup.
    pub delta1: f64,
    /// Neighbourhood threshold, steps.
    pub delta2: f64,
    pub epsilon: f64,
    /// KL weight used while fine-tuning.
    pub beta: f64,
    /// Fine-tuning epochs after each leg.
    pub finetune_epochs: usize,
    pub horizon: usize,
    pub budget: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Edge filter used by path search.
    pub max_edge: f64,
    /// Oracle radius used only to score discovery, metres.
    pub goal_radius: f64,
    /// Disable to run without the topological graph.
    pub use_graph: bool,
    /// Disable to force the goal-feasibility test to fail.
    pub feasibility: bool,
    /// How the prior density of the goal latent is compared with `epsilon`.
    pub feasibility_rule: FeasibilityRule,
    /// When a goal claim is scored as wrong, keep exploring instead of ending
    /// the run. The claim check then stays off until the predicted goal
    /// distance rises to `delta1` again.
    pub resume_after_false_claim: bool,
    pub frontier: FrontierMode,
    pub rho: f64,
    /// After a leg that ends in contact, turn around in place as the
    /// collection policy does.
    pub backup_after_collision: bool,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self {
            delta1: 4.0,
            delta2: 15.0,
            epsilon: 1e-2,
            beta: crate::model::DEFAULT_BETA,
            finetune_epochs: 10,
            horizon: 10,
            budget: 1000,
            seed: 0,
            learning_rate: 1e-4,
            batch_size: 128,
            max_edge: crate::topo::DEFAULT_MAX_EDGE,
            goal_radius: 2.0,
            use_graph: true,
            feasibility: true,
            feasibility_rule: FeasibilityRule::PerDimension,
            resume_after_false_claim: true,
            frontier: FrontierMode::PriorSample,
            rho: 0.9,
            backup_after_collision: true,
        }
    }
}

impl ExploreConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [self.delta1, self.delta2, self.epsilon, self.goal_radius, self.max_edge];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.horizon == 0 || !(self.beta >= 0.0) {
            return Err(crate::Error::Invalid(
                "thresholds must be positive, beta non-negative and the horizon at least one step".into(),
            ));
        }
        Ok(())
    }
}

/// A pose in a world plus a step budget. Every executed action is logged.
#[derive(Debug, Clone)]
pub struct Session<'w> {
    world: &'w World,
    pose: Pose,
    budget: usize,
    steps: usize,
    collisions: usize,
    trace: Vec<Pose>,
}

impl<'w> Session<'w> {
    pub fn new(world: &'w World, start: Pose, budget: usize) -> crate::Result<Self> {
        if !world.is_free(start.position()) {
            return Err(crate::Error::Contract("session must start in free space".into()));
        }
        Ok(Self {
            world,
            pose: start,
            budget,
            steps: 0,
            collisions: 0,
            trace: vec![start],
        })
    }

    pub fn world(&self) -> &'w World {
        self.world
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn position(&self) -> Point {
        self.pose.position()
    }

    pub fn observe(&self) -> Observation {
        self.world.observe(self.pose)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.steps
    }

    pub fn collisions(&self) -> usize {
        self.collisions
    }

    /// Poses visited so far, starting with the initial one.
    pub fn trace(&self) -> &[Pose] {
        &self.trace
    }

    /// Executes one action, or returns `None` once the budget is spent.
    pub fn step(&mut self, action: Action) -> Option<StepOutcome> {
        if self.steps >= self.budget {
            return None;
        }
        let out = self.world.step(self.pose, action);
        self.pose = out.pose;
        self.steps += 1;
        self.collisions += out.collided as usize;
        self.trace.push(out.pose);
        Some(out)
    }

    /// Extends the budget, e.g. to hand a fresh allowance to a navigation phase.
    pub fn set_budget(&mut self, budget: usize) {
        self.budget = budget.max(self.steps);
    }
}
