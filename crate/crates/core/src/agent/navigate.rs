use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::leg::{back_off, closed_loop_leg, subgoal_navigate, LegMode};
use super::Session;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::{Observation, Point, Pose};
use crate::topo::TopoGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavigateConfig {
    pub horizon: usize,
    /// Above this predicted distance to the expected vertex, re-plan.
    pub delta2: f64,
    pub max_edge: f64,
    pub budget: usize,
    pub goal_radius: f64,
    /// Closed-loop legs re-encode the target every step and stop on arrival.
    pub closed_loop: bool,
    /// Predicted distance at which a closed-loop leg stops.
    pub arrive: f64,
    pub max_replans: usize,
    /// Legs spent on one vertex before judging whether it was reached.
    pub legs_per_vertex: usize,
    /// A vertex counts as reached below this predicted distance.
    pub reach: f64,
    /// Closed-loop legs toward the goal after the last vertex.
    pub final_legs: usize,
    /// Turn around in place after a leg that ends in contact.
    pub backup_after_collision: bool,
    pub seed: u64,
}

impl Default for NavigateConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            delta2: 15.0,
            max_edge: crate::topo::DEFAULT_MAX_EDGE,
            budget: 1000,
            goal_radius: 2.0,
            closed_loop: true,
            arrive: 1.0,
            max_replans: 30,
            legs_per_vertex: 3,
            reach: 4.0,
            final_legs: 3,
            backup_after_collision: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigateResult {
    pub success: bool,
    pub steps: usize,
    pub legs: usize,
    pub replans: usize,
    /// True when the graph offered no route under the edge filter.
    pub no_path: bool,
    /// The first planned vertex sequence.
    pub plan: Vec<usize>,
    pub final_pose: Pose,
    pub trace: Vec<Pose>,
}

/// Plans over `graph` from the current vertex to the goal's vertex and follows
/// the plan one vertex per leg, re-planning when it drifts off course.
pub fn goal_navigate(
    session: &mut Session<'_>,
    model: &ModelParams,
    graph: &TopoGraph,
    goal_obs: &Observation,
    goal: Point,
    cfg: &NavigateConfig,
) -> Result<NavigateResult> {
    let start_steps = session.steps();
    session.set_budget(start_steps + cfg.budget);
    let (v_goal, _) = graph.associate(model, goal_obs)?;
    let mut legs = 0;
    let mut replans = 0;
    let mut no_path = false;
    let mut plan = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut leg_to = |session: &mut Session<'_>, target: &Observation| -> Result<usize> {
        let leg = if cfg.closed_loop {
            closed_loop_leg(session, model, target, cfg.horizon, cfg.arrive)?
        } else {
            let z = model.encode_mean(&session.observe(), target)?;
            // navigate mode never draws noise
            subgoal_navigate(session, model, &z, cfg.horizon, LegMode::Navigate, &mut rng)?
        };
        if leg.collided && cfg.backup_after_collision {
            back_off(session, &mut rng);
        }
        Ok(leg.steps())
    };

    'plan: while session.remaining() > 0 {
        if model.predicted_distance(&session.observe(), goal_obs)? < cfg.arrive {
            break;
        }
        let (v_now, _) = graph.associate(model, &session.observe())?;
        let path = match graph.shortest_path(v_now, v_goal, cfg.max_edge) {
            Ok(p) => p,
            Err(Error::NoPath { .. }) => {
                no_path = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if plan.is_empty() {
            plan = path.clone();
        }
        for &v in &path[1..] {
            let target = &graph.nodes()[v].o;
            for _ in 0..cfg.legs_per_vertex.max(1) {
                if session.remaining() == 0 {
                    break 'plan;
                }
                leg_to(session, target)?;
                legs += 1;
                if model.predicted_distance(&session.observe(), target)? < cfg.reach {
                    break;
                }
            }
            if model.predicted_distance(&session.observe(), target)? > cfg.delta2 {
                replans += 1;
                if replans > cfg.max_replans {
                    break 'plan;
                }
                continue 'plan;
            }
        }
        for _ in 0..cfg.final_legs {
            if session.remaining() == 0 || model.predicted_distance(&session.observe(), goal_obs)? < cfg.arrive {
                break 'plan;
            }
            if leg_to(session, goal_obs)? == 0 {
                break 'plan;
            }
            legs += 1;
        }
        // still not there: start over from wherever we ended up
        replans += 1;
        if replans > cfg.max_replans {
            break;
        }
    }

    let final_pose = session.pose();
    Ok(NavigateResult {
        success: !no_path && final_pose.position().distance(goal) <= cfg.goal_radius,
        steps: session.steps() - start_steps,
        legs,
        replans,
        no_path,
        plan,
        final_pose,
        trace: session.trace()[start_steps..].to_vec(),
    })
}
