mod common;

use common::graph::{check_paths, check_sequence, Op};
use proptest::prelude::*;
use recon::topo::TopoGraph;

/// Random asymmetric distances with a zero diagonal.
fn table(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..30.0, n), n).prop_map(|mut t| {
        for (i, row) in t.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        t
    })
}

fn ops(n: usize) -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(
        prop_oneof![3 => (0..n).prop_map(Op::Expand), 1 => (0usize..64).prop_map(Op::Increment)],
        1..40,
    )
}

fn sparse_graph(n: usize, edges: &[(usize, usize, f64)]) -> TopoGraph {
    let text = serde_json::json!({
        "vertices": (0..n).map(|i| serde_json::json!({"id": i, "count": 1 + i % 3, "observation": [i as f64]})).collect::<Vec<_>>(),
        "edges": edges.iter().filter(|e| e.0 != e.1).map(|&(a, b, w)| serde_json::json!({"from": a, "to": b, "weight": w})).collect::<Vec<_>>(),
    });
    serde_json::from_value(text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_operation_sequences_keep_invariants(
        (t, o) in (2usize..=15).prop_flat_map(|n| (table(n), ops(n))),
        dedup in 0.0f64..6.0,
        max_edge in 5.0f64..25.0,
    ) {
        let g = check_sequence(&t, &o, dedup, max_edge);
        prop_assert!(g.is_ok(), "{}", g.unwrap_err());
        prop_assert!(g.unwrap().len() <= 15);
    }

    #[test]
    fn sparse_graphs_match_brute_force(
        n in 1usize..=12,
        raw in prop::collection::vec((0usize..12, 0usize..12, 0.0f64..25.0), 0..40),
    ) {
        let edges: Vec<_> = raw.into_iter().filter(|e| e.0 < n && e.1 < n).collect();
        let g = sparse_graph(n, &edges);
        let r = check_paths(&g, 20.0);
        prop_assert!(r.is_ok(), "{}", r.unwrap_err());
        let back: TopoGraph = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn saved_graphs_reload() {
    let t = vec![vec![0.0, 3.0, 9.0], vec![4.0, 0.0, 2.5], vec![8.0, 1.5, 0.0]];
    let g = check_sequence(&t, &[Op::Expand(0), Op::Expand(1), Op::Expand(2), Op::Increment(1)], 0.5, 20.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    g.save(&path).unwrap();
    assert_eq!(TopoGraph::load(&path).unwrap(), g);
    assert_eq!(g.shortest_path(0, 2, 20.0).unwrap(), vec![0, 1, 2]);
}
