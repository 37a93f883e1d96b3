use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};
use crate::nn::{Dense, DenseNet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub rays: usize,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub beta: f64,
    pub seed: u64,
    pub step: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_trace: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    /// `[rows, cols]` of the row-major weight array.
    shape: [usize; 2],
    weight: Vec<f64>,
    bias: Vec<f64>,
}

/// JSON checkpoint: metadata plus `"encoder.<i>"` / `"decoder.<i>"` layer records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    layers: BTreeMap<String, LayerRecord>,
}

fn records(prefix: &str, net: &DenseNet, out: &mut BTreeMap<String, LayerRecord>) {
    for (i, layer) in net.layers().iter().enumerate() {
        out.insert(
            format!("{prefix}.{i}"),
            LayerRecord {
                shape: [layer.outputs(), layer.inputs()],
                weight: layer.weight.iter().copied().collect(),
                bias: layer.bias.to_vec(),
            },
        );
    }
}

fn rebuild(prefix: &str, layers: &BTreeMap<String, LayerRecord>) -> Result<DenseNet> {
    let mut out = Vec::new();
    while let Some(rec) = layers.get(&format!("{prefix}.{}", out.len())) {
        let [rows, cols] = rec.shape;
        if rec.bias.len() != rows {
            return Err(Error::dim("checkpoint bias", rows, rec.bias.len()));
        }
        let weight = Array2::from_shape_vec((rows, cols), rec.weight.clone())
            .map_err(|_| Error::dim("checkpoint weight", rows * cols, rec.weight.len()))?;
        out.push(Dense {
            weight,
            bias: Array1::from(rec.bias.clone()),
        });
    }
    DenseNet::from_layers(out)
}

impl Checkpoint {
    pub fn new(model: &ModelParams, seed: u64, step: u64) -> Self {
        let cfg = model.config();
        let mut layers = BTreeMap::new();
        records("encoder", &model.encoder, &mut layers);
        records("decoder", &model.decoder, &mut layers);
        Self {
            meta: CheckpointMeta {
                rays: cfg.rays,
                latent_dim: cfg.latent_dim,
                hidden: cfg.hidden,
                beta: cfg.beta,
                seed,
                step,
                loss_trace: None,
            },
            layers,
        }
    }

    pub fn with_loss_trace(mut self, trace: Vec<f64>) -> Self {
        self.meta.loss_trace = Some(trace);
        self
    }

    pub fn model(&self) -> Result<ModelParams> {
        let encoder = rebuild("encoder", &self.layers)?;
        let decoder = rebuild("decoder", &self.layers)?;
        let model = ModelParams::from_parts(encoder, decoder, self.meta.beta)?;
        if model.rays() != self.meta.rays || model.latent_dim() != self.meta.latent_dim {
            return Err(Error::Invalid("checkpoint metadata disagrees with its layers".into()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::json("checkpoint", e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trips_bit_exactly(seed in any::<u64>(), scale in 1e-300f64..1e300, beta in 0.0f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = ModelParams::new(&ModelConfig::new(8).with_beta(beta), &mut rng);
            for s in m.param_slices_mut() {
                for (i, v) in s.iter_mut().enumerate() {
                    *v += scale * ((i as f64) * 0.123).sin() / 3.0;
                }
            }
            let ck = Checkpoint::new(&m, seed, 77);
            let text = ck.to_json().unwrap();
            let back: Checkpoint = serde_json::from_str(&text).unwrap();
            let restored = back.model().unwrap();
            for (a, b) in restored.param_slices().iter().zip(m.param_slices()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            prop_assert_eq!(back.meta, ck.meta);
            prop_assert_eq!(restored.beta.to_bits(), beta.to_bits());
        }
    }

    #[test]
    fn corrupted_shapes_are_rejected() {
        let m = ModelParams::new(&ModelConfig::new(8), &mut ChaCha8Rng::seed_from_u64(0));
        let mut ck = Checkpoint::new(&m, 0, 0);
        ck.layers.get_mut("decoder.1").unwrap().weight.pop();
        assert!(ck.model().is_err());
    }
}
