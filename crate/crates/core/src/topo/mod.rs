//! Topological memory: observation-keyed vertices with visitation counts and
//! directed edges weighted by predicted distance.

mod path;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::Observation;

pub use path::{path_cost, shortest_path};

/// Default edge filter for path search, in timesteps.
pub const DEFAULT_MAX_EDGE: f64 = 20.0;

/// Anything that can score "how many steps from `a` to `b`" for a batch of pairs.
pub trait DistanceModel {
    fn distances(&self, pairs: &[(&Observation, &Observation)]) -> Result<Vec<f64>>;

    fn distance(&self, from: &Observation, to: &Observation) -> Result<f64> {
        Ok(self.distances(&[(from, to)])?[0])
    }
}

impl DistanceModel for ModelParams {
    fn distances(&self, pairs: &[(&Observation, &Observation)]) -> Result<Vec<f64>> {
        self.predicted_distances(pairs)
    }
}

impl<F> DistanceModel for F
where
    F: Fn(&Observation, &Observation) -> f64,
{
    fn distances(&self, pairs: &[(&Observation, &Observation)]) -> Result<Vec<f64>> {
        Ok(pairs.iter().map(|(a, b)| self(a, b)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoNode {
    pub id: usize,
    pub count: u64,
    #[serde(rename = "observation")]
    pub o: Observation,
}

/// What [`TopoGraph::expand`] did with an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// Close enough to an existing vertex; its count was bumped instead.
    Merged(usize),
    Added(usize),
}

impl Expansion {
    pub fn id(self) -> usize {
        match self {
            Expansion::Merged(id) | Expansion::Added(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EdgeRecord {
    from: usize,
    to: usize,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<TopoNode>,
    edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct TopoGraph {
    nodes: Vec<TopoNode>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl From<TopoGraph> for GraphFile {
    fn from(g: TopoGraph) -> Self {
        GraphFile {
            edges: g
                .edges
                .iter()
                .map(|(&(from, to), &weight)| EdgeRecord { from, to, weight })
                .collect(),
            vertices: g.nodes,
        }
    }
}

impl TryFrom<GraphFile> for TopoGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        let mut g = TopoGraph::default();
        for (i, node) in f.vertices.into_iter().enumerate() {
            if node.id != i {
                return Err(Error::Invalid(format!("vertex ids must be 0..n in order, found {} at {i}", node.id)));
            }
            if node.count == 0 {
                return Err(Error::Invalid(format!("vertex {i} has zero count")));
            }
            g.nodes.push(node);
        }
        for e in f.edges {
            g.insert_edge(e.from, e.to, e.weight)?;
        }
        Ok(g)
    }
}

/// Summary statistics printed by `graph inspect`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub vertices: usize,
    pub edges: usize,
    pub total_count: u64,
    pub max_count: u64,
    pub min_weight: Option<f64>,
    pub mean_weight: Option<f64>,
    pub max_weight: Option<f64>,
    /// Edges that survive the default path-search filter.
    pub edges_below_max: usize,
}

impl TopoGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TopoNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&TopoNode> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::Contract(format!("unknown vertex {id}")))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<f64> {
        self.edges.get(&(from, to)).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    /// Outgoing edges of `from`, in increasing target id.
    pub fn out_edges(&self, from: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edges
            .range((from, 0)..=(from, usize::MAX))
            .map(|(&(_, b), &w)| (b, w))
    }

    fn insert_edge(&mut self, from: usize, to: usize, weight: f64) -> Result<()> {
        if from == to {
            return Err(Error::Invalid(format!("self edge on vertex {from}")));
        }
        if from >= self.nodes.len() || to >= self.nodes.len() {
            return Err(Error::Invalid(format!("edge {from}->{to} references a missing vertex")));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::Invalid(format!("edge {from}->{to} has weight {weight}")));
        }
        self.edges.insert((from, to), weight);
        Ok(())
    }

    /// Predicted distances from `o` to every vertex, in id order.
    fn distances_from(&self, model: &impl DistanceModel, o: &Observation) -> Result<Vec<f64>> {
        let pairs: Vec<_> = self.nodes.iter().map(|n| (o, &n.o)).collect();
        model.distances(&pairs)
    }

    /// Nearest vertex to `o` and the predicted distance to it. Ties go to the lowest id.
    pub fn associate(&self, model: &impl DistanceModel, o: &Observation) -> Result<(usize, f64)> {
        if self.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let d = self.distances_from(model, o)?;
        let mut best = (0, d[0]);
        for (i, &v) in d.iter().enumerate().skip(1) {
            if v < best.1 {
                best = (i, v);
            }
        }
        Ok(best)
    }

    /// Adds `o` as a vertex unless its nearest vertex is closer than `dedup`,
    /// in which case that vertex's count is incremented.
    pub fn expand(&mut self, model: &impl DistanceModel, o: &Observation, dedup: f64) -> Result<Expansion> {
        if !self.is_empty() {
            let (id, d) = self.associate(model, o)?;
            if d < dedup {
                self.nodes[id].count += 1;
                return Ok(Expansion::Merged(id));
            }
        }
        let id = self.nodes.len();
        let mut pairs = Vec::with_capacity(2 * id);
        for n in &self.nodes {
            pairs.push((o, &n.o));
            pairs.push((&n.o, o));
        }
        let w = model.distances(&pairs)?;
        self.nodes.push(TopoNode {
            id,
            count: 1,
            o: o.clone(),
        });
        for other in 0..id {
            self.insert_edge(id, other, w[2 * other])?;
            self.insert_edge(other, id, w[2 * other + 1])?;
        }
        Ok(Expansion::Added(id))
    }

    /// Among the associated vertex and its out-neighbours closer than `max_edge`,
    /// the one with the smallest count. Ties go to the closer vertex (the
    /// associated one counts as distance zero), then the lower id. Returns its
    /// id and the predicted distance from `o` to it.
    pub fn least_explored_neighbor(
        &self,
        model: &impl DistanceModel,
        o: &Observation,
        max_edge: f64,
    ) -> Result<(usize, f64)> {
        let (v, _) = self.associate(model, o)?;
        let mut best = (self.nodes[v].count, 0.0, v);
        for (n, w) in self.out_edges(v) {
            if w >= max_edge {
                continue;
            }
            let cand = (self.nodes[n].count, w, n);
            if cand.0 < best.0 || (cand.0 == best.0 && (cand.1, cand.2) < (best.1, best.2)) {
                best = cand;
            }
        }
        let best = best.2;
        let d = model.distance(o, &self.nodes[best].o)?;
        Ok((best, d))
    }

    pub fn increment_count(&mut self, id: usize) -> Result<u64> {
        let node = self
            .nodes
            .get_mut(id)
            .ok_or_else(|| Error::Contract(format!("unknown vertex {id}")))?;
        node.count += 1;
        Ok(node.count)
    }

    pub fn shortest_path(&self, from: usize, to: usize, max_edge: f64) -> Result<Vec<usize>> {
        shortest_path(self, from, to, max_edge)
    }

    pub fn summary(&self) -> GraphSummary {
        let weights: Vec<f64> = self.edges.values().copied().collect();
        let (min, max, mean) = if weights.is_empty() {
            (None, None, None)
        } else {
            (
                Some(weights.iter().copied().fold(f64::INFINITY, f64::min)),
                Some(weights.iter().copied().fold(0.0, f64::max)),
                Some(weights.iter().sum::<f64>() / weights.len() as f64),
            )
        };
        GraphSummary {
            vertices: self.nodes.len(),
            edges: self.edges.len(),
            total_count: self.nodes.iter().map(|n| n.count).sum(),
            max_count: self.nodes.iter().map(|n| n.count).max().unwrap_or(0),
            min_weight: min,
            mean_weight: mean,
            max_weight: max,
            edges_below_max: weights.iter().filter(|&&w| w < DEFAULT_MAX_EDGE).count(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::json("graph", e))
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
