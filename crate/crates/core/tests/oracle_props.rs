mod common;

use cndp::approx::{self, ApproxParams};
use cndp::generate::{random_instance, GeneratorConfig};
use cndp::oracle::oracle;
use cndp::relaxation::solve_relaxation;
use cndp::Algorithm;
use proptest::prelude::*;

proptest! {
    #![proptest_config(common::cases(12))]

    #[test]
    fn oracle_dominance(seed in any::<u64>(), degree in 1u32..=2, single_sink in any::<bool>()) {
        let cfg = GeneratorConfig {
            max_nodes: 3,
            max_edges: 3,
            max_commodities: 2,
            degree,
            single_sink,
            strict_only: true,
            with_budget: false,
        };
        let inst = random_instance(seed, &cfg).unwrap();
        let relax = solve_relaxation(&inst).unwrap();
        let best = approx::solve(&inst, Algorithm::Best2, &ApproxParams::default()).unwrap();
        let grid = oracle(&inst, 32).unwrap();
        let g = best.certificate.guarantee;
        prop_assert!(best.certificate.total <= g * relax.cost * (1.0 + 1e-6));
        prop_assert!(grid.cost >= relax.cost - 1e-9 * relax.cost.max(1.0));
        // The grid optimum is an upper bound on the true optimum.
        prop_assert!(best.certificate.total <= g * grid.cost * (1.0 + 1e-6));
    }
}
