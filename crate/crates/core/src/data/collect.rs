use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Action, Observation, Pose, World, OMEGA_MAX, V_MAX};

/// One recorded control step: the observation the action was chosen from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub o: Observation,
    #[serde(with = "crate::data::dataset::action_pair")]
    pub a: Action,
}

/// Smooth segment of experience, ended by a collision or the length cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub terminal: Observation,
    pub collided: bool,
}

impl Trajectory {
    /// Number of observations, counting the terminal one.
    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn observation(&self, i: usize) -> &Observation {
        if i == self.steps.len() {
            &self.terminal
        } else {
            &self.steps[i].o
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectConfig {
    /// AR(1) coefficient of the random walk.
    pub rho: f64,
    /// Segment length cap, in actions.
    pub max_len: usize,
    /// Uniform jitter around the π backup turn, radians.
    pub backup_jitter: f64,
    /// Consecutive collisions tolerated before giving up.
    pub max_backups: usize,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self {
            rho: 0.9,
            max_len: 100,
            backup_jitter: 0.3,
            max_backups: 20,
        }
    }
}

/// `a = ρ·prev + (1−ρ)·u` with `u` uniform over the action box, clamped.
pub fn random_walk_action<R: Rng + ?Sized>(prev: Action, rho: f64, rng: &mut R) -> Action {
    let u_v = rng.gen_range(0.0..=V_MAX);
    let u_w = rng.gen_range(-OMEGA_MAX..=OMEGA_MAX);
    Action::new(
        rho * prev.v + (1.0 - rho) * u_v,
        rho * prev.omega + (1.0 - rho) * u_w,
    )
}

/// In-place turn by π ± `jitter` in a random direction, at full rate and
/// spread evenly over as few steps as the rate limit allows.
pub fn backup_turn<R: Rng + ?Sized>(dt: f64, jitter: f64, rng: &mut R) -> Vec<Action> {
    let turn = PI + rng.gen_range(-jitter..=jitter);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let n = (turn / (OMEGA_MAX * dt)).ceil() as usize;
    let omega = sign * turn / (n as f64 * dt);
    vec![Action::new(0.0, omega); n]
}

struct Recorder {
    steps: Vec<TrajectoryStep>,
    out: Vec<Trajectory>,
}

impl Recorder {
    fn finish(&mut self, terminal: &Observation, collided: bool) {
        if !self.steps.is_empty() {
            self.out.push(Trajectory {
                steps: std::mem::take(&mut self.steps),
                terminal: terminal.clone(),
                collided,
            });
        }
    }
}

/// Runs the random-walk collection policy for `n_steps` control steps.
///
/// A collision closes the current trajectory. The backup turn (an in-place
/// rotation by π ± jitter, since the platform cannot reverse) opens the next
/// one, so the data shows how to leave a contact.
pub fn collect(
    world: &World,
    start: Option<Pose>,
    n_steps: usize,
    seed: u64,
    cfg: &CollectConfig,
) -> Result<Vec<Trajectory>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pose = match start {
        Some(p) => p,
        None => world.sample_free_pose(&mut rng)?,
    };
    if !world.is_free(pose.position()) {
        return Err(Error::Contract("collection must start in free space".into()));
    }
    let mut obs = world.observe(pose);
    let mut prev = Action::new(rng.gen_range(0.0..=V_MAX), rng.gen_range(-OMEGA_MAX..=OMEGA_MAX));
    let mut rec = Recorder {
        steps: Vec::new(),
        out: Vec::new(),
    };
    // Collisions that happen without getting clear of the previous contact.
    let mut consecutive_backups = 0;
    let mut last_contact: Option<crate::sim::Point> = None;
    let mut backup: Vec<Action> = Vec::new();

    for _ in 0..n_steps {
        let action = match backup.pop() {
            Some(a) => a,
            None => random_walk_action(prev, cfg.rho, &mut rng),
        };
        let out = world.step(pose, action);
        rec.steps.push(TrajectoryStep {
            o: obs.clone(),
            a: action,
        });
        pose = out.pose;
        obs = world.observe(pose);
        prev = action;

        if out.collided {
            rec.finish(&obs, true);
            let here = pose.position();
            match last_contact {
                Some(p) if p.distance(here) < world.agent_radius() => consecutive_backups += 1,
                _ => consecutive_backups = 1,
            }
            last_contact = Some(here);
            if consecutive_backups > cfg.max_backups {
                return Err(Error::Wedged {
                    x: pose.x,
                    y: pose.y,
                    attempts: consecutive_backups,
                });
            }
            backup = backup_turn(world.dt(), cfg.backup_jitter, &mut rng);
        } else if rec.steps.len() >= cfg.max_len {
            rec.finish(&obs, false);
        }
    }
    rec.finish(&obs, false);
    Ok(rec.out)
}
