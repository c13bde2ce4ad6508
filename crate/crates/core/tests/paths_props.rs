mod common;

use cndp::generate::{random_instance, GeneratorConfig};
use cndp::paths::{shortest_path, shortest_path_tree, WeightedView};
use cndp::{Cost, NodeId};
use common::simple_paths;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_weights(seed: u64, m: usize) -> Vec<Option<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| if rng.random_bool(0.15) { None } else { Some(rng.random_range(0.0..10.0)) })
        .collect()
}

proptest! {
    #![proptest_config(common::cases(128))]

    #[test]
    fn tree_satisfies_bellman(seed in any::<u64>(), wseed in any::<u64>()) {
        let inst = random_instance(seed, &GeneratorConfig::default()).unwrap();
        let view = WeightedView::new(&inst, random_weights(wseed, inst.num_edges())).unwrap();
        let sink = inst.commodities()[0].sink;
        let tree = shortest_path_tree(&view, sink).unwrap();
        prop_assert_eq!(tree.dist[sink.0], Cost::Finite(0.0));
        for (i, edge) in inst.edges().iter().enumerate() {
            let Some(w) = view.weight(cndp::EdgeId(i)) else { continue };
            if let Cost::Finite(head) = tree.dist[edge.head.0] {
                let tail = tree.dist[edge.tail.0].value();
                prop_assert!(tail <= head + w + 1e-12);
            }
        }
        for (node, next) in tree.next.iter().enumerate() {
            if let Some(e) = next {
                let edge = inst.edge(*e);
                prop_assert_eq!(edge.tail, NodeId(node));
                let w = view.weight(*e).unwrap();
                let (t, h) = (tree.dist[node].value(), tree.dist[edge.head.0].value());
                prop_assert!((t - (h + w)).abs() <= 1e-12 * t.max(1.0));
            }
        }
    }

    #[test]
    fn matches_path_enumeration(seed in any::<u64>(), wseed in any::<u64>()) {
        let cfg = GeneratorConfig { max_nodes: 6, max_edges: 12, ..Default::default() };
        let inst = random_instance(seed, &cfg).unwrap();
        let weights = random_weights(wseed, inst.num_edges());
        let view = WeightedView::new(&inst, weights.clone()).unwrap();
        for c in inst.commodities() {
            let brute = simple_paths(&inst, c.source, c.sink)
                .iter()
                .filter_map(|p| p.iter().map(|&e| weights[e]).sum::<Option<f64>>())
                .fold(f64::INFINITY, f64::min);
            let sp = shortest_path(&view, c.source, c.sink).unwrap();
            if brute.is_finite() {
                let d = sp.dist.finite().unwrap();
                prop_assert!((d - brute).abs() <= 1e-12 * brute.max(1.0), "{d} vs {brute}");
                let along: f64 = sp.edges.iter().map(|&e| weights[e.0].unwrap()).sum();
                prop_assert!((along - d).abs() <= 1e-12 * d.max(1.0));
            } else {
                prop_assert_eq!(sp.dist, Cost::Infinite);
            }
        }
    }
}
