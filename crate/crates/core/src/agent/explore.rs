use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::leg::{back_off, random_burst, subgoal_navigate_watching, GoalWatch, Leg, LegMode};
use super::{ExploreConfig, FrontierMode, Session};
use crate::data::Quadruple;
use crate::error::Result;
use crate::model::{LatentOrigin, ModelParams, Trainer};
use crate::sim::{Action, Observation, Point, Pose};
use crate::topo::TopoGraph;

/// Which rule chose the leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// The goal looked reachable: head for it.
    FeasibleGoal,
    /// At the frontier: propose something new.
    ExploreFrontier,
    /// Not at the frontier yet: head for the least-visited neighbour.
    ToFrontier,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::FeasibleGoal => "feasible-goal",
            Branch::ExploreFrontier => "explore-frontier",
            Branch::ToFrontier => "to-frontier",
        }
    }
}

/// One line of the decision trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub leg: usize,
    pub branch: Branch,
    /// Where the latent goal came from; `None` for random bursts.
    pub origin: Option<LatentOrigin>,
    /// Predicted steps to the goal when the decision was made.
    pub goal_distance: f64,
    pub graph_size: usize,
    pub steps: usize,
    pub collided: bool,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let origin = match self.origin {
            Some(LatentOrigin::PosteriorMean) => "posterior-mean",
            Some(LatentOrigin::PosteriorSample) => "posterior-sample",
            Some(LatentOrigin::PriorSample) => "prior-sample",
            None => "random-actions",
        };
        write!(
            f,
            "leg={} branch={} z={} d_goal={:.3} graph={} steps={}{}",
            self.leg,
            self.branch.as_str(),
            origin,
            self.goal_distance,
            self.graph_size,
            self.steps,
            if self.collided { " collided" } else { "" }
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExploreResult {
    pub graph: TopoGraph,
    /// Online experience gathered during the run.
    pub dataset: Vec<Quadruple>,
    pub model: ModelParams,
    pub discovered: bool,
    /// True when the agent's own stopping rule ended the run.
    pub stopped_at_goal: bool,
    /// Goal claims scored as wrong and explored past.
    pub rejected_claims: usize,
    pub steps: usize,
    pub steps_to_discovery: Option<usize>,
    pub final_goal_distance: f64,
    pub final_pose: Pose,
    pub decisions: Vec<Decision>,
    /// Mean loss of the last fine-tuning epoch after each leg.
    pub finetune_losses: Vec<f64>,
    /// Evaluation only.
    pub trace: Vec<Pose>,
    pub collisions: usize,
}

/// Serializable view of an [`ExploreResult`] without the model, graph or data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreSummary {
    pub discovered: bool,
    pub stopped_at_goal: bool,
    pub rejected_claims: usize,
    pub steps: usize,
    pub steps_to_discovery: Option<usize>,
    pub final_goal_distance: f64,
    pub final_pose: Pose,
    pub graph_vertices: usize,
    pub graph_edges: usize,
    pub dataset_size: usize,
    pub collisions: usize,
    pub branches: BTreeMap<String, usize>,
    pub decisions: Vec<Decision>,
    pub finetune_losses: Vec<f64>,
    pub trace: Vec<Pose>,
}

impl ExploreResult {
    pub fn branch_histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for d in &self.decisions {
            let key = match (d.branch, d.origin) {
                (Branch::ExploreFrontier, Some(LatentOrigin::PriorSample)) => "explore-frontier/prior-sample",
                (Branch::ExploreFrontier, None) => "explore-frontier/random-actions",
                (b, _) => b.as_str(),
            };
            *h.entry(key.to_string()).or_insert(0) += 1;
        }
        h
    }

    pub fn summary(&self) -> ExploreSummary {
        ExploreSummary {
            discovered: self.discovered,
            stopped_at_goal: self.stopped_at_goal,
            rejected_claims: self.rejected_claims,
            steps: self.steps,
            steps_to_discovery: self.steps_to_discovery,
            final_goal_distance: self.final_goal_distance,
            final_pose: self.final_pose,
            graph_vertices: self.graph.len(),
            graph_edges: self.graph.edge_count(),
            dataset_size: self.dataset.len(),
            collisions: self.collisions,
            branches: self.branch_histogram(),
            decisions: self.decisions.clone(),
            finetune_losses: self.finetune_losses.clone(),
            trace: self.trace.clone(),
        }
    }
}

/// Explores from the session's pose until the model believes it is at
/// `goal_obs` or the step budget is spent.
///
/// `goal` is used only to score a claim. A wrong claim is counted and, when
/// `resume_after_false_claim` is set, exploration goes on; the check re-arms
/// once the predicted distance climbs back above `delta1`.
pub fn explore(
    session: &mut Session<'_>,
    model: &ModelParams,
    goal_obs: &Observation,
    goal: Point,
    cfg: &ExploreConfig,
) -> Result<ExploreResult> {
    cfg.validate()?;
    let mut model = model.clone();
    model.beta = cfg.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trainer = Trainer::new(&model, cfg.learning_rate, cfg.batch_size, cfg.seed ^ 0x5eed_f1e7);
    let mut graph = TopoGraph::new();
    let mut dataset: Vec<Quadruple> = Vec::new();
    let mut decisions = Vec::new();
    let mut finetune_losses = Vec::new();
    let mut prev_action = Action::STOP;
    let mut stopped_at_goal = false;

    if cfg.use_graph && session.remaining() > 0 {
        graph.expand(&model, &session.observe(), cfg.delta1)?;
    }

    let mut final_goal_distance;
    let mut armed = true;
    let mut rejected_claims = 0;
    loop {
        let o_t = session.observe();
        let z_goal = model.encode_mean(&o_t, goal_obs)?;
        let d_goal = model.predicted_distance(&o_t, goal_obs)?;
        final_goal_distance = d_goal;
        if d_goal >= cfg.delta1 {
            armed = true;
        } else if armed {
            if session.pose().position().distance(goal) <= cfg.goal_radius || !cfg.resume_after_false_claim {
                stopped_at_goal = true;
                break;
            }
            rejected_claims += 1;
            armed = false;
        }
        if session.remaining() == 0 {
            break;
        }
        let watch = armed.then_some(GoalWatch {
            model: &model,
            goal: goal_obs,
            within: cfg.delta1,
        });

        let feasible = cfg.feasibility && cfg.feasibility_rule.density(z_goal.z.view()) > cfg.epsilon;
        let frontier = if feasible || !cfg.use_graph {
            None
        } else {
            let (n, d_n) = graph.least_explored_neighbor(&model, &o_t, cfg.delta2)?;
            Some((graph.nodes()[n].o.clone(), d_n))
        };
        let (branch, origin, leg) = match frontier {
            _ if feasible => {
                let leg = subgoal_navigate_watching(session, &model, &z_goal, cfg.horizon, LegMode::Explore, watch, &mut rng)?;
                (Branch::FeasibleGoal, Some(LatentOrigin::PosteriorMean), leg)
            }
            Some((o_n, d_n)) if d_n >= cfg.delta1 || cfg.frontier == FrontierMode::FollowFrontier => {
                let z = model.encode_mean(&o_t, &o_n)?;
                let leg = subgoal_navigate_watching(session, &model, &z, cfg.horizon, LegMode::Explore, watch, &mut rng)?;
                (Branch::ToFrontier, Some(LatentOrigin::PosteriorMean), leg)
            }
            _ if cfg.frontier == FrontierMode::RandomActions => {
                let leg = random_burst(session, prev_action, cfg.horizon, cfg.rho, watch, &mut rng)?;
                (Branch::ExploreFrontier, None, leg)
            }
            _ => {
                let z = model.sample_prior(&mut rng);
                let leg = subgoal_navigate_watching(session, &model, &z, cfg.horizon, LegMode::Explore, watch, &mut rng)?;
                (Branch::ExploreFrontier, Some(LatentOrigin::PriorSample), leg)
            }
        };

        let Leg {
            quads,
            o_end,
            actions,
            collided,
        } = leg;
        if actions.is_empty() {
            // budget exhausted mid-decision
            break;
        }
        prev_action = *actions.last().unwrap();
        if collided && cfg.backup_after_collision {
            prev_action = back_off(session, &mut rng).unwrap_or(prev_action);
        }
        decisions.push(Decision {
            leg: decisions.len(),
            branch,
            origin,
            goal_distance: d_goal,
            graph_size: graph.len(),
            steps: actions.len(),
            collided,
        });
        dataset.extend(quads);

        if cfg.use_graph {
            let (v, _) = graph.associate(&model, &o_end)?;
            graph.increment_count(v)?;
            graph.expand(&model, &o_end, cfg.delta1)?;
        }
        if cfg.finetune_epochs > 0 {
            trainer.batch_size = cfg.batch_size.min(dataset.len()).max(1);
            let losses = trainer.run_epochs(&mut model, &dataset, cfg.finetune_epochs)?;
            finetune_losses.push(*losses.last().unwrap());
        }
    }

    let final_pose = session.pose();
    let discovered = stopped_at_goal && final_pose.position().distance(goal) <= cfg.goal_radius;
    Ok(ExploreResult {
        graph,
        dataset,
        model,
        discovered,
        stopped_at_goal,
        rejected_claims,
        steps: session.steps(),
        steps_to_discovery: discovered.then(|| session.steps()),
        final_goal_distance,
        final_pose,
        decisions,
        finetune_losses,
        trace: session.trace().to_vec(),
        collisions: session.collisions(),
    })
}
