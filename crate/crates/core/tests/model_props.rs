mod common;

use cndp::generate::{random_instance, GeneratorConfig};
use cndp::json::{instance_to_json, parse_instance, SolutionFile};
use cndp::model::{capacity_cost, routing_cost, validate_flow, FlowAssignment};
use cndp::relaxation::solve_relaxation;
use proptest::prelude::*;

proptest! {
    #![proptest_config(common::cases(96))]

    #[test]
    fn instance_json_round_trip(seed in any::<u64>(), budget in any::<bool>(), degree in 1u32..=3) {
        let cfg = GeneratorConfig { degree, with_budget: budget, ..Default::default() };
        let inst = random_instance(seed, &cfg).unwrap();
        let text = instance_to_json(&inst);
        prop_assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn solution_json_round_trip(seed in any::<u64>()) {
        let inst = random_instance(seed, &GeneratorConfig::default()).unwrap();
        let relax = solve_relaxation(&inst).unwrap();
        let file = SolutionFile::from_json(&SolutionFile::new(&inst, &relax.flow, &relax.caps).to_json()).unwrap();
        prop_assert_eq!(file.capacities_for(&inst).unwrap(), relax.caps.clone());
        prop_assert_eq!(file.flows_for(&inst).unwrap(), relax.flow.clone());
    }

    #[test]
    fn relaxed_flows_conserve(seed in any::<u64>()) {
        let inst = random_instance(seed, &GeneratorConfig::default()).unwrap();
        let relax = solve_relaxation(&inst).unwrap();
        prop_assert!(validate_flow(&inst, &relax.flow).is_empty());
        let total = routing_cost(&inst, &relax.flow, &relax.caps).unwrap().value()
            + capacity_cost(&inst, &relax.caps);
        prop_assert!((total - relax.cost).abs() <= 1e-9 * relax.cost.max(1.0));
    }

    #[test]
    fn perturbed_flow_is_flagged(seed in any::<u64>(), shift in 0.01..0.5f64) {
        let inst = random_instance(seed, &GeneratorConfig::default()).unwrap();
        let relax = solve_relaxation(&inst).unwrap();
        let mut per: Vec<Vec<f64>> =
            (0..inst.num_commodities()).map(|k| relax.flow.commodity(k).to_vec()).collect();
        let e = relax.paths[0][0].0;
        per[0][e] += shift;
        prop_assert!(!validate_flow(&inst, &FlowAssignment::new(per)).is_empty());
    }
}
