//! Standard worlds and the shared pretraining recipe.

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::data::{collect, CollectConfig, Dataset};
use crate::error::Result;
use crate::model::{ModelConfig, ModelParams, TrainConfig, TrainReport};
use crate::sim::{Point, RandomWorldConfig, World};

pub const TEST_START: Point = Point { x: 2.0, y: 6.0 };
pub const TEST_GOAL: Point = Point { x: 34.0, y: 6.0 };

/// 36 × 12 m hall with scattered discs; start and goal at opposite ends,
/// at least 30 m apart along the shortest path.
pub fn test_world_config() -> RandomWorldConfig {
    let mut cfg = RandomWorldConfig::rect(36.0, 12.0, 14).with_route(TEST_START, TEST_GOAL);
    cfg.min_goal_geodesic = Some(30.0);
    cfg
}

pub const TEST_WORLD_SEEDS: [u64; 3] = [101, 202, 303];

/// One of the three standard test worlds.
pub fn test_world(index: usize) -> Result<World> {
    test_world_config().generate(TEST_WORLD_SEEDS[index % TEST_WORLD_SEEDS.len()])
}

/// Exploration budget for the method comparison, steps.
pub const EXPLORE_BUDGET: usize = 1500;

/// Settings shared by every method in the desk-scale comparison.
///
/// Fine-tuning is off here: on endpoint-relabelled legs alone it pulls every
/// predicted distance toward the leg length, which multiplies false goal
/// claims, and at ten epochs over the growing online set it costs about a
/// minute per run on one core.
pub fn standard_run_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.explore.budget = EXPLORE_BUDGET;
    cfg.explore.finetune_epochs = 0;
    cfg
}

/// Training worlds: 20 × 20 m squares and halls shaped like the test worlds,
/// never sharing a seed with them.
pub fn training_worlds() -> Vec<(RandomWorldConfig, u64)> {
    vec![
        (RandomWorldConfig::square(20.0, 12), 1),
        (RandomWorldConfig::rect(36.0, 12.0, 14), 2),
        (RandomWorldConfig::square(20.0, 12), 3),
        (RandomWorldConfig::rect(36.0, 12.0, 14), 4),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub worlds: Vec<(RandomWorldConfig, u64)>,
    pub steps_per_world: usize,
    pub collect: CollectConfig,
    pub t_max: usize,
    /// Uniform subsample of the relabelled pairs.
    pub max_quads: Option<usize>,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            worlds: training_worlds(),
            steps_per_world: 4000,
            collect: CollectConfig::default(),
            t_max: 30,
            max_quads: Some(150_000),
            model: ModelConfig::new(32),
            train: TrainConfig {
                epochs: 30,
                batch_size: 128,
                learning_rate: 1e-3,
                seed: 0,
                kl_warmup_epochs: 0,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pretrained {
    pub model: ModelParams,
    pub dataset: Dataset,
    pub report: TrainReport,
}

/// Builds the offline dataset described by `cfg`.
pub fn offline_dataset(cfg: &PretrainConfig) -> Result<Dataset> {
    let mut trajs = Vec::new();
    let mut world_seeds = Vec::new();
    let mut collection_seeds = Vec::new();
    for (i, (wc, seed)) in cfg.worlds.iter().enumerate() {
        let world = wc.generate(*seed)?;
        let cseed = cfg.train.seed.wrapping_mul(1000).wrapping_add(i as u64);
        trajs.extend(collect(&world, None, cfg.steps_per_world, cseed, &cfg.collect)?);
        world_seeds.push(*seed);
        collection_seeds.push(cseed);
    }
    let mut data = Dataset::from_trajectories(&trajs, cfg.t_max, cfg.max_quads, cfg.train.seed);
    data.provenance.world_seeds = world_seeds;
    data.provenance.collection_seeds = collection_seeds;
    data.provenance.steps_per_world = cfg.steps_per_world;
    Ok(data)
}

/// Collects, relabels and trains from scratch. Deterministic in `cfg`.
pub fn pretrain(cfg: &PretrainConfig) -> Result<Pretrained> {
    use rand::SeedableRng;
    let dataset = offline_dataset(cfg)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut model = ModelParams::new(&cfg.model, &mut rng);
    let report = crate::model::train(&mut model, &dataset, &cfg.train)?;
    Ok(Pretrained {
        model,
        dataset,
        report,
    })
}
