use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ModelParams;
use crate::data::{Dataset, Quadruple};
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, AdamState};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Epochs over which the KL weight ramps linearly up to the model's β.
    #[serde(default)]
    pub kl_warmup_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            batch_size: 128,
            learning_rate: 1e-4,
            seed: 0,
            kl_warmup_epochs: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean minibatch loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

/// Adam state plus the shuffling/noise stream, kept across calls so that
/// repeated fine-tuning continues one optimiser trajectory.
#[derive(Debug, Clone)]
pub struct Trainer {
    adam: AdamState,
    rng: ChaCha8Rng,
    pub batch_size: usize,
}

impl Trainer {
    pub fn new(model: &ModelParams, learning_rate: f64, batch_size: usize, seed: u64) -> Self {
        let shapes = model.param_slices().iter().map(|s| s.len()).collect::<Vec<_>>();
        Self {
            adam: AdamState::new(AdamConfig::with_learning_rate(learning_rate), shapes),
            rng: ChaCha8Rng::seed_from_u64(seed),
            batch_size: batch_size.max(1),
        }
    }

    pub fn steps(&self) -> u64 {
        self.adam.step
    }

    /// Runs `epochs` shuffled passes over `data`, returning per-epoch mean losses.
    pub fn run_epochs(
        &mut self,
        model: &mut ModelParams,
        data: &[Quadruple],
        epochs: usize,
    ) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::Contract("cannot train on an empty dataset".into()));
        }
        let d = model.latent_dim();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut losses = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            order.shuffle(&mut self.rng);
            let mut sum = 0.0;
            for chunk in order.chunks(self.batch_size) {
                let batch: Vec<&Quadruple> = chunk.iter().map(|&i| &data[i]).collect();
                let noise = Array2::from_shape_simple_fn((batch.len(), d), || {
                    self.rng.sample::<f64, _>(StandardNormal)
                });
                let (parts, grads) = model.vib_loss_and_grads(&batch, noise.view())?;
                if !parts.total.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        loss: parts.total,
                    });
                }
                sum += parts.total * batch.len() as f64;
                let grad_slices = grads.slices();
                self.adam.step(&mut model.param_slices_mut(), &grad_slices)?;
            }
            let mean = sum / data.len() as f64;
            if !mean.is_finite() || !model.encoder.all_finite() || !model.decoder.all_finite() {
                return Err(Error::Divergence { epoch, loss: mean });
            }
            losses.push(mean);
        }
        Ok(losses)
    }
}

/// Minimises the bottleneck loss with Adam. Deterministic given `cfg.seed`.
pub fn train(model: &mut ModelParams, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::Contract("cannot train on an empty dataset".into()));
    }
    if cfg.epochs == 0 {
        return Ok(TrainReport::default());
    }
    let mut trainer = Trainer::new(model, cfg.learning_rate, cfg.batch_size, cfg.seed);
    let beta = model.beta;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if epoch < cfg.kl_warmup_epochs {
            model.beta = beta * (epoch + 1) as f64 / (cfg.kl_warmup_epochs + 1) as f64;
        } else {
            model.beta = beta;
        }
        let losses = trainer.run_epochs(model, &data.quads, 1);
        model.beta = beta;
        epoch_losses.extend(losses?);
    }
    Ok(TrainReport {
        epoch_losses,
        steps: trainer.steps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::sim::{Action, Observation};

    fn toy_dataset(n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let quads = (0..n)
            .map(|_| {
                let d = rng.gen_range(1..8u32);
                let o: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..1.0)).collect();
                let g: Vec<f64> = o.iter().map(|v| (v + 0.05 * d as f64).min(1.0)).collect();
                Quadruple {
                    o: Observation::new(o),
                    g: Observation::new(g),
                    a: Action::new(0.5, 0.1 * d as f64 - 0.4),
                    d,
                }
            })
            .collect();
        Dataset::new(quads)
    }

    fn model(seed: u64) -> ModelParams {
        ModelParams::new(&ModelConfig::new(8), &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let mut m = model(1);
        let before = m.clone();
        let report = train(&mut m, &toy_dataset(10), &TrainConfig::default().with_epochs(0)).unwrap();
        assert_eq!(m, before);
        assert!(report.epoch_losses.is_empty());
    }

    #[test]
    fn toy_training_reduces_loss() {
        let data = toy_dataset(50);
        let mut m = model(2);
        let noise = Array2::zeros((50, 16));
        let batch: Vec<&Quadruple> = data.quads.iter().collect();
        let initial = m.vib_loss(&batch, noise.view()).unwrap().total;
        let cfg = TrainConfig {
            epochs: 200,
            learning_rate: 1e-3,
            ..TrainConfig::default()
        };
        let report = train(&mut m, &data, &cfg).unwrap();
        let last = *report.epoch_losses.last().unwrap();
        assert!(last < initial, "{last} !< {initial}");
        assert_eq!(report.steps, 200);
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_dataset(40);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            learning_rate: 1e-3,
            seed: 9,
            ..TrainConfig::default()
        };
        let (mut a, mut b) = (model(3), model(3));
        let ra = train(&mut a, &data, &cfg).unwrap();
        let rb = train(&mut b, &data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let mut m = model(0);
        assert!(train(&mut m, &Dataset::default(), &TrainConfig::default()).is_err());
    }
}
