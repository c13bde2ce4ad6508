mod common;

use cndp::approx::{self, ApproxParams};
use cndp::gadgets::{compile, parse_dimacs, verify_witness, DEFAULT_EPSILON};
use cndp::relaxation::solve_relaxation;
use cndp::Algorithm;
use common::{random_formula, random_satisfiable, rel_close};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn formula_cost(num_vars: usize, num_clauses: usize, eps: f64) -> f64 {
    let (n, m) = (num_vars as f64, num_clauses as f64);
    2.0 * m * n + (4.0 + eps) * m
}

proptest! {
    #![proptest_config(common::cases(40))]

    #[test]
    fn every_model_is_a_witness(seed in any::<u64>(), eps in 0.01..0.124f64) {
        let (formula, models) = random_satisfiable(seed, 10, 8);
        let gadget = compile(&formula, eps).unwrap();
        let relax = solve_relaxation(&gadget.instance).unwrap();
        let expected = formula_cost(formula.num_vars(), formula.num_clauses(), eps);
        prop_assert!(rel_close(gadget.witness_cost(), expected, 1e-12));
        prop_assert!(rel_close(relax.cost, expected, 1e-9));
        // Checking every model of a 10-variable formula is cheap; cap the count anyway.
        for model in models.iter().take(64) {
            let (flow, caps) = gadget.witness(model).unwrap();
            let report = verify_witness(&gadget, &flow, &caps);
            prop_assert!(report.pass(), "{report}");
            prop_assert!(rel_close(report.total.value(), relax.cost, 1e-9));
        }
    }

    #[test]
    fn relaxation_cost_holds_for_any_formula(seed in any::<u64>(), n in 3usize..=8, m in 1usize..=12) {
        let formula = random_formula(&mut ChaCha8Rng::seed_from_u64(seed), n, m);
        let gadget = compile(&formula, DEFAULT_EPSILON).unwrap();
        let relax = solve_relaxation(&gadget.instance).unwrap();
        prop_assert!(rel_close(relax.cost, formula_cost(n, m, DEFAULT_EPSILON), 1e-9));
        prop_assert!(gadget.unsatisfiable_lower_bound() > gadget.witness_cost());
    }

    #[test]
    fn dimacs_round_trip(seed in any::<u64>(), n in 3usize..=8, m in 1usize..=12) {
        let formula = random_formula(&mut ChaCha8Rng::seed_from_u64(seed), n, m);
        prop_assert_eq!(parse_dimacs(&formula.to_dimacs()).unwrap(), formula);
    }

    #[test]
    fn non_models_are_rejected(seed in any::<u64>()) {
        let (formula, models) = random_satisfiable(seed, 6, 10);
        let gadget = compile(&formula, DEFAULT_EPSILON).unwrap();
        let n = formula.num_vars();
        for mask in 0u32..1 << n {
            let a: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            if !models.contains(&a) {
                prop_assert!(gadget.witness(&a).is_err());
            }
        }
    }
}

proptest! {
    #![proptest_config(common::cases(12))]

    #[test]
    fn best_of_two_stays_within_guarantee(seed in any::<u64>()) {
        let (formula, _) = random_satisfiable(seed, 5, 6);
        let gadget = compile(&formula, DEFAULT_EPSILON).unwrap();
        let sol = approx::solve(&gadget.instance, Algorithm::Best2, &ApproxParams::default()).unwrap();
        let bound = 49.0 / 41.0 * gadget.witness_cost() + 1e-6;
        prop_assert!(sol.certificate.total <= bound, "{} > {bound}", sol.certificate.total);
    }
}
