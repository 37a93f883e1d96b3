use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Session;
use crate::data::{backup_turn, random_walk_action, Quadruple};

const BACKUP_JITTER: f64 = 0.3;
use crate::error::{Error, Result};
use crate::model::{LatentGoal, ModelParams};
use crate::sim::{Action, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LegMode {
    /// Actions are sampled from the decoded Gaussian.
    Explore,
    /// Actions are the decoded means.
    Navigate,
}

/// One executed rollout and its endpoint-relabelled experience.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    /// `(o_t, o_end, a_t, n - t)` for every executed step `t < n`.
    pub quads: Vec<Quadruple>,
    pub o_end: Observation,
    pub actions: Vec<Action>,
    pub collided: bool,
}

impl Leg {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }
}

fn endpoint_relabel(obs: &[Observation], actions: &[Action]) -> Vec<Quadruple> {
    let n = actions.len();
    let end = &obs[n];
    actions
        .iter()
        .enumerate()
        .map(|(t, a)| Quadruple {
            o: obs[t].clone(),
            g: end.clone(),
            a: *a,
            d: (n - t) as u32,
        })
        .collect()
}

/// Ends a leg as soon as the model predicts a target closer than `within`.
#[derive(Debug, Clone, Copy)]
pub struct GoalWatch<'a> {
    pub model: &'a ModelParams,
    pub goal: &'a Observation,
    pub within: f64,
}

impl GoalWatch<'_> {
    fn fires(&self, o: &Observation) -> Result<bool> {
        Ok(self.model.predicted_distance(o, self.goal)? < self.within)
    }
}

/// Drives `policy` for up to `horizon` steps, stopping on collision, when the
/// budget runs out or when `watch` fires. `policy` may return `None` to end
/// the leg early.
fn rollout(
    session: &mut Session<'_>,
    horizon: usize,
    watch: Option<GoalWatch<'_>>,
    mut policy: impl FnMut(&Observation) -> Result<Option<Action>>,
) -> Result<Leg> {
    let mut obs = vec![session.observe()];
    let mut actions = Vec::with_capacity(horizon);
    let mut collided = false;
    for _ in 0..horizon {
        let Some(action) = policy(obs.last().unwrap())? else {
            break;
        };
        let Some(out) = session.step(action) else {
            break;
        };
        actions.push(action);
        obs.push(session.observe());
        if out.collided {
            collided = true;
            break;
        }
        if let Some(w) = &watch {
            if w.fires(obs.last().unwrap())? {
                break;
            }
        }
    }
    Ok(Leg {
        quads: endpoint_relabel(&obs, &actions),
        o_end: obs.pop().unwrap(),
        actions,
        collided,
    })
}

/// Follows a fixed latent goal for `horizon` steps.
pub fn subgoal_navigate<R: Rng + ?Sized>(
    session: &mut Session<'_>,
    model: &ModelParams,
    goal: &LatentGoal,
    horizon: usize,
    mode: LegMode,
    rng: &mut R,
) -> Result<Leg> {
    subgoal_navigate_watching(session, model, goal, horizon, mode, None, rng)
}

/// [`subgoal_navigate`] that also stops early when `watch` fires.
pub fn subgoal_navigate_watching<R: Rng + ?Sized>(
    session: &mut Session<'_>,
    model: &ModelParams,
    goal: &LatentGoal,
    horizon: usize,
    mode: LegMode,
    watch: Option<GoalWatch<'_>>,
    rng: &mut R,
) -> Result<Leg> {
    if goal.z.len() != model.latent_dim() {
        return Err(Error::dim("latent goal", model.latent_dim(), goal.z.len()));
    }
    rollout(session, horizon, watch, |o| {
        let pred = model.decode(o, goal.z.view())?;
        Ok(Some(match mode {
            LegMode::Navigate => pred.action,
            LegMode::Explore => {
                let noise = Array1::from_shape_simple_fn(3, || rng.sample::<f64, _>(StandardNormal));
                pred.sample(noise.view())?.0
            }
        }))
    })
}

/// Re-encodes the target at every step and follows the mean action until
/// the predicted distance drops below `arrive` or the horizon runs out.
pub(crate) fn closed_loop_leg(
    session: &mut Session<'_>,
    model: &ModelParams,
    target: &Observation,
    horizon: usize,
    arrive: f64,
) -> Result<Leg> {
    rollout(session, horizon, None, |o| {
        let z = model.encode_mean(o, target)?;
        let pred = model.decode(o, z.z.view())?;
        if pred.distance < arrive {
            return Ok(None);
        }
        Ok(Some(pred.action))
    })
}

/// Turns around in place after a contact, the way the collection policy
/// does. Returns the last action executed, if any.
pub fn back_off<R: Rng + ?Sized>(session: &mut Session<'_>, rng: &mut R) -> Option<Action> {
    let mut last = None;
    for a in backup_turn(session.world().dt(), BACKUP_JITTER, rng) {
        session.step(a)?;
        last = Some(a);
    }
    last
}

/// `horizon` steps of the correlated random walk, continuing from `prev`.
pub fn random_burst<R: Rng + ?Sized>(
    session: &mut Session<'_>,
    prev: Action,
    horizon: usize,
    rho: f64,
    watch: Option<GoalWatch<'_>>,
    rng: &mut R,
) -> Result<Leg> {
    let mut a = prev;
    rollout(session, horizon, watch, |_| {
        a = random_walk_action(a, rho, rng);
        Ok(Some(a))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::sim::{Pose, World, WorldSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open() -> World {
        World::new(WorldSpec::empty(40.0, 40.0)).unwrap()
    }

    fn model() -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = ModelParams::new(&ModelConfig::new(32), &mut rng);
        // give the decoder a non-trivial forward speed
        m.decoder.param_slices_mut().last_mut().unwrap()[0] = 0.6;
        m
    }

    #[test]
    fn single_step_leg_yields_one_quadruple() {
        let w = open();
        let m = model();
        let mut s = Session::new(&w, Pose::new(20.0, 20.0, 0.0), 100).unwrap();
        let z = m.sample_prior(&mut ChaCha8Rng::seed_from_u64(0));
        let leg = subgoal_navigate(&mut s, &m, &z, 1, LegMode::Navigate, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(leg.quads.len(), 1);
        assert_eq!(leg.quads[0].d, 1);
        assert_eq!(leg.quads[0].g, leg.o_end);
        assert_eq!(s.steps(), 1);
    }

    #[test]
    fn endpoint_gaps_count_down() {
        let w = open();
        let m = model();
        let mut s = Session::new(&w, Pose::new(20.0, 20.0, 0.0), 100).unwrap();
        let z = m.sample_prior(&mut ChaCha8Rng::seed_from_u64(0));
        let leg = subgoal_navigate(&mut s, &m, &z, 10, LegMode::Explore, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let gaps: Vec<u32> = leg.quads.iter().map(|q| q.d).collect();
        assert_eq!(gaps, (1..=10).rev().collect::<Vec<u32>>());
        assert!(leg.quads.iter().all(|q| q.g == leg.o_end));
    }

    #[test]
    fn navigate_mode_ignores_the_noise_stream() {
        let w = open();
        let m = model();
        let z = m.sample_prior(&mut ChaCha8Rng::seed_from_u64(0));
        let run = |seed| {
            let mut s = Session::new(&w, Pose::new(20.0, 20.0, 0.0), 100).unwrap();
            subgoal_navigate(&mut s, &m, &z, 10, LegMode::Navigate, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        };
        let a = run(1);
        assert_eq!(a, run(2));
        assert!(a.actions.iter().all(|x| (x.v - 0.6).abs() < 1e-12 && x.omega == 0.0));
    }

    #[test]
    fn collision_truncates_and_budget_caps() {
        let w = World::new(WorldSpec::empty(4.0, 4.0)).unwrap();
        let m = model();
        let z = m.sample_prior(&mut ChaCha8Rng::seed_from_u64(0));
        let mut s = Session::new(&w, Pose::new(3.0, 2.0, 0.0), 100).unwrap();
        let leg = subgoal_navigate(&mut s, &m, &z, 10, LegMode::Navigate, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(leg.collided);
        assert!(leg.steps() < 10);

        let mut s = Session::new(&w, Pose::new(1.0, 2.0, 0.0), 3).unwrap();
        let leg = random_burst(&mut s, Action::STOP, 10, 0.9, None, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((leg.steps(), s.remaining()), (3, 0));
    }

    #[test]
    fn wrong_latent_size_is_rejected() {
        let w = open();
        let m = model();
        let mut s = Session::new(&w, Pose::new(20.0, 20.0, 0.0), 100).unwrap();
        let z = crate::model::sample_prior(3, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(subgoal_navigate(&mut s, &m, &z, 5, LegMode::Explore, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
