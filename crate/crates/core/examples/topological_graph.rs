//! Builds a topological memory from a trajectory with a hand-written
//! distance model, plans through it and round-trips it through JSON.

use recon::sim::Observation;
use recon::topo::{DistanceModel, TopoGraph};

/// Distance in steps between two 1-D "positions" stored in the first ray.
struct Line;

impl DistanceModel for Line {
    fn distances(&self, pairs: &[(&Observation, &Observation)]) -> recon::Result<Vec<f64>> {
        Ok(pairs.iter().map(|(a, b)| ((a.rays()[0] - b.rays()[0]) * 100.0).abs()).collect())
    }
}

fn main() -> recon::Result<()> {
    let mut g = TopoGraph::new();
    for i in 0..=20 {
        let o = Observation::new(vec![i as f64 * 0.03]);
        let e = g.expand(&Line, &o, 4.0)?;
        if i % 5 == 0 {
            println!("step {i:2}: {e:?}, {} vertices", g.len());
        }
    }
    let goal = g.len() - 1;
    let path = g.shortest_path(0, goal, 20.0)?;
    println!("path {path:?}");
    let (n, d) = g.least_explored_neighbor(&Line, &g.nodes()[0].o.clone(), 15.0)?;
    println!("least explored neighbour of 0: {n} at {d:.1} steps");
    println!("{}", serde_json::to_string(&g.summary()).unwrap());

    let path = std::env::temp_dir().join("recon_graph.json");
    g.save(&path)?;
    assert_eq!(TopoGraph::load(&path)?.to_json()?, g.to_json()?);
    println!("saved {}", path.display());
    Ok(())
}
