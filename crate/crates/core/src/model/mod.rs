//! Context-conditioned bottleneck goal model.
//!
//! The encoder maps `(o_t, o_g)` to a diagonal Gaussian over a latent goal
//! `z`; the decoder maps `(o_t, z)` to a diagonal Gaussian over
//! `(v, ω, d)`. Training minimises the negative log-likelihood of the
//! relabeled action and step gap plus β times the KL to a standard normal
//! prior.

mod checkpoint;
mod loss;
mod train;

use ndarray::{s, Array1, Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::nn::{DenseNet, DiagGaussian, LN_SQRT_2PI};
use crate::sim::{Action, Observation};

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use loss::{LossParts, ModelGrads};
pub use train::{train, TrainConfig, TrainReport, Trainer};

/// Decoder output width: `(v, ω, d)`.
pub const DECODER_OUT: usize = 3;

/// Bottleneck weight used for pretraining and fine-tuning. At 1.0 the
/// uninformative encoder is optimal for a learned-variance likelihood.
pub const DEFAULT_BETA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelConfig {
    pub rays: usize,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub beta: f64,
}

impl ModelConfig {
    pub fn new(rays: usize) -> Self {
        Self {
            rays,
            latent_dim: 16,
            hidden: vec![128, 128],
            beta: DEFAULT_BETA,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// Encoder and decoder weights plus the bottleneck weight β.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub encoder: DenseNet,
    pub decoder: DenseNet,
    rays: usize,
    latent_dim: usize,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatentOrigin {
    PosteriorMean,
    PosteriorSample,
    PriorSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentGoal {
    pub z: Array1<f64>,
    pub origin: LatentOrigin,
}

/// Decoded action/distance Gaussian with its clamped means.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistancePrediction {
    pub action: Action,
    /// Predicted steps to the goal, clamped at 0.
    pub distance: f64,
    pub dist: DiagGaussian,
}

impl ActionDistancePrediction {
    /// Draw `(action, distance)` using injected standard-normal `noise` (3 values).
    pub fn sample(&self, noise: ArrayView1<'_, f64>) -> Result<(Action, f64)> {
        let x = self.dist.reparameterize(noise)?;
        Ok((Action::new(x[0], x[1]), x[2].max(0.0)))
    }
}

impl ModelParams {
    /// Glorot hidden layers, zeroed output layers: an untrained model encodes
    /// every pair to N(0, I) and decodes to N(0, I).
    pub fn new<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Self {
        let mut enc_sizes = vec![2 * cfg.rays];
        enc_sizes.extend(&cfg.hidden);
        enc_sizes.push(2 * cfg.latent_dim);
        let mut dec_sizes = vec![cfg.rays + cfg.latent_dim];
        dec_sizes.extend(&cfg.hidden);
        dec_sizes.push(2 * DECODER_OUT);
        let mut encoder = DenseNet::new(&enc_sizes, rng);
        let mut decoder = DenseNet::new(&dec_sizes, rng);
        encoder.zero_output_layer();
        decoder.zero_output_layer();
        Self {
            encoder,
            decoder,
            rays: cfg.rays,
            latent_dim: cfg.latent_dim,
            beta: cfg.beta,
        }
    }

    /// Assembles a model from explicit networks, checking the shapes.
    pub fn from_parts(encoder: DenseNet, decoder: DenseNet, beta: f64) -> Result<Self> {
        if encoder.output_dim() % 2 != 0 || encoder.input_dim() % 2 != 0 {
            return Err(Error::Contract("encoder widths must be even".into()));
        }
        let rays = encoder.input_dim() / 2;
        let latent_dim = encoder.output_dim() / 2;
        if decoder.input_dim() != rays + latent_dim {
            return Err(Error::dim("decoder input", rays + latent_dim, decoder.input_dim()));
        }
        if decoder.output_dim() != 2 * DECODER_OUT {
            return Err(Error::dim("decoder output", 2 * DECODER_OUT, decoder.output_dim()));
        }
        if !(beta >= 0.0) {
            return Err(Error::Contract("beta must be non-negative".into()));
        }
        Ok(Self {
            encoder,
            decoder,
            rays,
            latent_dim,
            beta,
        })
    }

    pub fn rays(&self) -> usize {
        self.rays
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn config(&self) -> ModelConfig {
        let sizes = self.encoder.sizes();
        ModelConfig {
            rays: self.rays,
            latent_dim: self.latent_dim,
            hidden: sizes[1..sizes.len() - 1].to_vec(),
            beta: self.beta,
        }
    }

    fn check_obs(&self, o: &Observation) -> Result<()> {
        if o.len() != self.rays {
            return Err(Error::dim("observation", self.rays, o.len()));
        }
        Ok(())
    }

    /// Posterior p(z | o_t, o_g).
    pub fn encode(&self, o_t: &Observation, o_g: &Observation) -> Result<DiagGaussian> {
        self.check_obs(o_t)?;
        self.check_obs(o_g)?;
        let x: Array1<f64> = o_t.rays().iter().chain(o_g.rays()).copied().collect();
        let out = self.encoder.forward(x.view())?;
        let d = self.latent_dim;
        DiagGaussian::new(out.slice(s![..d]).to_owned(), out.slice(s![d..]).to_owned())
    }

    pub fn encode_mean(&self, o_t: &Observation, o_g: &Observation) -> Result<LatentGoal> {
        Ok(LatentGoal {
            z: self.encode(o_t, o_g)?.mean().clone(),
            origin: LatentOrigin::PosteriorMean,
        })
    }

    /// Decoder q(a, d | z, o_t).
    pub fn decode(&self, o_t: &Observation, z: ArrayView1<'_, f64>) -> Result<ActionDistancePrediction> {
        self.check_obs(o_t)?;
        if z.len() != self.latent_dim {
            return Err(Error::dim("latent", self.latent_dim, z.len()));
        }
        let x: Array1<f64> = o_t.rays().iter().chain(z.iter()).copied().collect();
        let out = self.decoder.forward(x.view())?;
        let dist = DiagGaussian::new(
            out.slice(s![..DECODER_OUT]).to_owned(),
            out.slice(s![DECODER_OUT..]).to_owned(),
        )?;
        let mu = dist.mean();
        Ok(ActionDistancePrediction {
            action: Action::new(mu[0], mu[1]),
            distance: mu[2].max(0.0),
            dist,
        })
    }

    /// Distance head of the decoder evaluated at the posterior mean.
    pub fn predicted_distance(&self, o_t: &Observation, o_g: &Observation) -> Result<f64> {
        let z = self.encode(o_t, o_g)?;
        Ok(self.decode(o_t, z.mean().view())?.distance)
    }

    /// Batched [`predicted_distance`](Self::predicted_distance) over many pairs.
    pub fn predicted_distances(&self, pairs: &[(&Observation, &Observation)]) -> Result<Vec<f64>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let (k, d) = (self.rays, self.latent_dim);
        let mut enc_in = Array2::zeros((pairs.len(), 2 * k));
        for (i, (a, b)) in pairs.iter().enumerate() {
            self.check_obs(a)?;
            self.check_obs(b)?;
            let mut row = enc_in.row_mut(i);
            for (j, v) in a.rays().iter().chain(b.rays()).enumerate() {
                row[j] = *v;
            }
        }
        let enc_out = self.encoder.forward_batch(enc_in.view())?;
        let mut dec_in = Array2::zeros((pairs.len(), k + d));
        dec_in.slice_mut(s![.., ..k]).assign(&enc_in.slice(s![.., ..k]));
        dec_in.slice_mut(s![.., k..]).assign(&enc_out.slice(s![.., ..d]));
        let dec_out = self.decoder.forward_batch(dec_in.view())?;
        Ok(dec_out.column(2).iter().map(|v| v.max(0.0)).collect())
    }

    /// Feasibility test against the prior: the per-dimension geometric-mean
    /// density of the posterior mean under N(0, 1) must exceed `epsilon`.
    pub fn feasibility(&self, o_t: &Observation, o_g: &Observation, epsilon: f64) -> Result<bool> {
        let z = self.encode(o_t, o_g)?;
        Ok(per_dim_prior_density(z.mean().view()) > epsilon)
    }

    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> LatentGoal {
        sample_prior(self.latent_dim, rng)
    }
}

/// `exp((1/D) Σ_i log N(z_i; 0, 1))`.
pub fn per_dim_prior_density(z: ArrayView1<'_, f64>) -> f64 {
    let d = z.len().max(1) as f64;
    let sq: f64 = z.iter().map(|v| v * v).sum();
    (-LN_SQRT_2PI - sq / (2.0 * d)).exp()
}

/// `N(z; 0, I)` over all dimensions.
pub fn prior_density(z: ArrayView1<'_, f64>) -> f64 {
    let sq: f64 = z.iter().map(|v| v * v).sum();
    (-(z.len() as f64) * LN_SQRT_2PI - sq / 2.0).exp()
}

/// Standard-normal draw over `dim` latent dimensions.
pub fn sample_prior<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> LatentGoal {
    LatentGoal {
        z: Array1::from_shape_simple_fn(dim, || rng.sample(StandardNormal)),
        origin: LatentOrigin::PriorSample,
    }
}
