use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::TopoGraph;
use crate::error::{Error, Result};

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on cost, then on id for reproducible tie handling
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over edges with weight strictly below `max_edge`.
pub fn shortest_path(g: &TopoGraph, from: usize, to: usize, max_edge: f64) -> Result<Vec<usize>> {
    g.node(from)?;
    g.node(to)?;
    let n = g.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Entry { cost: 0.0, node: from });
    while let Some(Entry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if node == to {
            break;
        }
        for (next, w) in g.out_edges(node) {
            if w >= max_edge {
                continue;
            }
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                prev[next] = node;
                heap.push(Entry { cost: c, node: next });
            }
        }
    }
    if !dist[to].is_finite() {
        return Err(Error::NoPath { from, to });
    }
    let mut path = vec![to];
    while *path.last().unwrap() != from {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Ok(path)
}

/// Total weight along consecutive vertices of `path`.
pub fn path_cost(g: &TopoGraph, path: &[usize]) -> Option<f64> {
    path.windows(2).map(|w| g.edge(w[0], w[1])).sum()
}
