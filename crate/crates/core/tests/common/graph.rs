//! Graph checks shared by the property suite and the acceptance run.

use recon::sim::Observation;
use recon::topo::{path_cost, TopoGraph};

/// Observation whose length encodes an index, so distances can come from a
/// table. (Ray values are clamped to `[0, 1]`, so the index can't be a value.)
pub fn tagged(i: usize) -> Observation {
    Observation::new(vec![0.0; i + 1])
}

fn tag(o: &Observation) -> usize {
    o.len() - 1
}

/// Distance model reading an asymmetric table indexed by observation tags.
pub fn table_model(table: &[Vec<f64>]) -> impl Fn(&Observation, &Observation) -> f64 + '_ {
    move |a, b| table[tag(a)][tag(b)]
}

#[derive(Debug, Clone)]
pub enum Op {
    Expand(usize),
    Increment(usize),
}

/// Cheapest simple path cost under the edge filter, by exhaustive search
/// over simple paths. Branches already costlier than the best complete path
/// are cut, which is safe with non-negative weights.
pub fn brute_force_cost(g: &TopoGraph, from: usize, to: usize, max_edge: f64) -> Option<f64> {
    fn dfs(g: &TopoGraph, at: usize, to: usize, max_edge: f64, cost: f64, seen: &mut Vec<bool>, best: &mut Option<f64>) {
        if best.map_or(false, |b| cost >= b) {
            return;
        }
        if at == to {
            *best = Some(cost);
            return;
        }
        let mut next_hops: Vec<(usize, f64)> = g.out_edges(at).filter(|&(n, w)| w < max_edge && !seen[n]).collect();
        // cheap edges first so the bound tightens early
        next_hops.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (next, w) in next_hops {
            {
                seen[next] = true;
                dfs(g, next, to, max_edge, cost + w, seen, best);
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; g.len()];
    seen[from] = true;
    let mut best = None;
    dfs(g, from, to, max_edge, 0.0, &mut seen, &mut best);
    best
}

/// Compares Dijkstra with exhaustive search for every ordered vertex pair.
pub fn check_paths(g: &TopoGraph, max_edge: f64) -> Result<(), String> {
    for a in 0..g.len() {
        for b in 0..g.len() {
            let expected = brute_force_cost(g, a, b, max_edge);
            match (g.shortest_path(a, b, max_edge), expected) {
                (Ok(p), Some(c)) => {
                    if p.first() != Some(&a) || p.last() != Some(&b) {
                        return Err(format!("{a}->{b}: path {p:?} has wrong endpoints"));
                    }
                    if p.windows(2).any(|w| g.edge(w[0], w[1]).map_or(true, |x| x >= max_edge)) {
                        return Err(format!("{a}->{b}: path {p:?} uses a missing or filtered edge"));
                    }
                    let got = path_cost(g, &p).unwrap();
                    if (got - c).abs() > 1e-9 * c.max(1.0) {
                        return Err(format!("{a}->{b}: cost {got} but brute force found {c}"));
                    }
                }
                (Err(recon::Error::NoPath { .. }), None) => {}
                (got, want) => return Err(format!("{a}->{b}: got {got:?}, brute force {want:?}")),
            }
        }
    }
    Ok(())
}

/// Applies `ops` and checks, after every step: counts never decrease and
/// start at one, the complete-digraph edge count, and a lossless JSON
/// round trip. Ends with a full path comparison.
pub fn check_sequence(table: &[Vec<f64>], ops: &[Op], dedup: f64, max_edge: f64) -> Result<TopoGraph, String> {
    let model = table_model(table);
    let mut g = TopoGraph::new();
    let mut counts: Vec<u64> = Vec::new();
    for op in ops {
        match *op {
            Op::Expand(i) => {
                g.expand(&model, &tagged(i), dedup).map_err(|e| e.to_string())?;
            }
            Op::Increment(k) => {
                if !g.is_empty() {
                    g.increment_count(k % g.len()).map_err(|e| e.to_string())?;
                }
            }
        }
        let now: Vec<u64> = g.nodes().iter().map(|n| n.count).collect();
        if now.len() < counts.len() || counts.iter().zip(&now).any(|(a, b)| b < a) || now.iter().any(|&c| c == 0) {
            return Err(format!("counts went from {counts:?} to {now:?}"));
        }
        counts = now;
        let v = g.len();
        if g.edge_count() != v * v.saturating_sub(1) {
            return Err(format!("{} edges on {v} vertices", g.edge_count()));
        }
        let back: TopoGraph = serde_json::from_str(&g.to_json().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        if back != g {
            return Err("JSON round trip changed the graph".into());
        }
    }
    check_paths(&g, max_edge)?;
    Ok(g)
}
