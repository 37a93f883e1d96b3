use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::collect::Trajectory;
use super::relabel::relabel;
use crate::error::{Error, Result};
use crate::sim::{Action, Observation};

/// Serializes an [`Action`] as `[v, omega]`.
pub(crate) mod action_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::sim::Action;

    pub fn serialize<S: Serializer>(a: &Action, s: S) -> Result<S::Ok, S::Error> {
        [a.v, a.omega].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Action, D::Error> {
        let [v, omega] = <[f64; 2]>::deserialize(d)?;
        Ok(Action { v, omega })
    }
}

/// Supervised record `(o_t, o_g, a_t, d)` with `d` the step gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadruple {
    pub o: Observation,
    pub g: Observation,
    #[serde(with = "action_pair")]
    pub a: Action,
    pub d: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub world_seeds: Vec<u64>,
    pub collection_seeds: Vec<u64>,
    pub steps_per_world: usize,
    pub t_max: usize,
    pub trajectories: usize,
    pub relabeled: usize,
    pub quadruples: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub quads: Vec<Quadruple>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(quads: Vec<Quadruple>) -> Self {
        let provenance = Provenance {
            quadruples: quads.len(),
            ..Provenance::default()
        };
        Self { quads, provenance }
    }

    /// Relabels every trajectory and, when `limit` is set, keeps a seeded
    /// uniform subsample of that many quadruples (in original order).
    pub fn from_trajectories(
        trajectories: &[Trajectory],
        t_max: usize,
        limit: Option<usize>,
        seed: u64,
    ) -> Self {
        let mut quads: Vec<Quadruple> = trajectories.iter().flat_map(|t| relabel(t, t_max)).collect();
        let relabeled = quads.len();
        if let Some(limit) = limit.filter(|&l| l < quads.len()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut keep = index::sample(&mut rng, quads.len(), limit).into_vec();
            keep.sort_unstable();
            let mut slots: Vec<Option<Quadruple>> = quads.into_iter().map(Some).collect();
            quads = keep.into_iter().map(|i| slots[i].take().expect("unique")).collect();
        }
        let provenance = Provenance {
            t_max,
            trajectories: trajectories.len(),
            relabeled,
            quadruples: quads.len(),
            ..Provenance::default()
        };
        Self { quads, provenance }
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    pub fn extend(&mut self, more: impl IntoIterator<Item = Quadruple>) {
        self.quads.extend(more);
        self.provenance.quadruples = self.quads.len();
    }

    /// Observation width shared by all records, checking uniformity.
    pub fn rays(&self) -> Result<usize> {
        let k = self.quads.first().map(|q| q.o.len()).ok_or_else(|| {
            Error::Invalid("dataset is empty".into())
        })?;
        for q in &self.quads {
            if q.o.len() != k || q.g.len() != k {
                return Err(Error::dim("dataset observation", k, q.o.len().max(q.g.len())));
            }
        }
        Ok(k)
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for q in &self.quads {
            out.push_str(&serde_json::to_string(q).map_err(|e| Error::json("quadruple", e))?);
            out.push('\n');
        }
        Ok(out)
    }

    /// SHA-256 of the JSON-lines encoding.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_jsonl()?.as_bytes())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()?).map_err(|e| Error::io(path, e))?;
        let meta = path.with_extension("meta.json");
        let text =
            serde_json::to_string_pretty(&self.provenance).map_err(|e| Error::json("provenance", e))?;
        std::fs::write(&meta, text).map_err(|e| Error::io(meta, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let quads = read_jsonl(path)?;
        let meta = path.with_extension("meta.json");
        let provenance = match std::fs::read_to_string(&meta) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::json(meta.display().to_string(), e))?,
            Err(_) => Provenance {
                quadruples: quads.len(),
                ..Provenance::default()
            },
        };
        Ok(Self { quads, provenance })
    }
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), i + 1), e))?;
        out.push(item);
    }
    Ok(out)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::json("jsonl record", e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl Trajectory {
    pub fn save_all(path: impl AsRef<Path>, trajectories: &[Trajectory]) -> Result<()> {
        write_jsonl(path.as_ref(), trajectories)
    }

    pub fn load_all(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
        read_jsonl(path.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{collect, CollectConfig};
    use crate::sim::{World, WorldSpec};

    #[test]
    fn quadruple_wire_format() {
        let q = Quadruple {
            o: Observation::new(vec![0.5, 1.0]),
            g: Observation::new(vec![0.25, 0.0]),
            a: Action::new(0.75, -0.5),
            d: 3,
        };
        let text = serde_json::to_string(&q).unwrap();
        assert_eq!(text, r#"{"o":[0.5,1.0],"g":[0.25,0.0],"a":[0.75,-0.5],"d":3}"#);
        assert_eq!(serde_json::from_str::<Quadruple>(&text).unwrap(), q);
    }

    #[test]
    fn files_round_trip() {
        let w = World::new(WorldSpec::empty(8.0, 8.0)).unwrap();
        let trajs = collect(&w, None, 150, 3, &CollectConfig::default()).unwrap();
        let ds = Dataset::from_trajectories(&trajs, 30, Some(500), 1);
        assert_eq!(ds.len(), 500.min(ds.provenance.relabeled));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        ds.save(&path).unwrap();
        let back = Dataset::load(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.hash().unwrap(), ds.hash().unwrap());

        let tpath = dir.path().join("traj.jsonl");
        Trajectory::save_all(&tpath, &trajs).unwrap();
        assert_eq!(Trajectory::load_all(&tpath).unwrap(), trajs);
    }
}
