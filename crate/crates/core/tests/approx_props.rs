mod common;

use cndp::approx::{self, scale_factor, ApproxParams};
use cndp::equilibrium::verify_wardrop;
use cndp::generate::{random_instance, GeneratorConfig};
use cndp::latency::{bte_bound_at, su_bound_at, ClassTag, FunctionClass};
use cndp::model::{capacity_cost, routing_cost, validate_flow};
use cndp::relaxation::solve_relaxation;
use cndp::Algorithm;
use common::rel_close;
use proptest::prelude::*;

fn classes() -> Vec<FunctionClass> {
    let mut tags: Vec<ClassTag> = (1..=8).map(ClassTag::PolynomialDegree).collect();
    tags.extend([ClassTag::Concave, ClassTag::ConvexGeneral]);
    tags.into_iter().map(FunctionClass::new).collect()
}

proptest! {
    #![proptest_config(common::cases(64))]

    #[test]
    fn outputs_are_feasible_equilibria(seed in any::<u64>(), degree in 1u32..=4) {
        let inst = random_instance(seed, &GeneratorConfig { degree, ..Default::default() }).unwrap();
        for algorithm in [Algorithm::Bte, Algorithm::Su, Algorithm::Best2] {
            let sol = approx::solve(&inst, algorithm, &ApproxParams::default()).unwrap();
            prop_assert!(validate_flow(&inst, &sol.flow).is_empty());
            let gap = verify_wardrop(&inst, &sol.caps, &sol.flow).unwrap().value();
            prop_assert!(gap <= 1e-6, "{algorithm}: gap {gap}");
            let c = &sol.certificate;
            prop_assert!(c.cost_split_consistent());
            let raw = routing_cost(&inst, &sol.flow, &sol.caps).unwrap().value()
                + capacity_cost(&inst, &sol.caps);
            prop_assert!(rel_close(raw, c.total, 1e-9), "{raw} vs {}", c.total);
            prop_assert!(c.ratio >= 1.0 - 1e-9);
            prop_assert!(c.within_guarantee(1e-6), "{c:?}");
        }
    }

    #[test]
    fn bte_never_adds_capacity(seed in any::<u64>(), degree in 1u32..=4) {
        let inst = random_instance(seed, &GeneratorConfig { degree, ..Default::default() }).unwrap();
        let relax = solve_relaxation(&inst).unwrap();
        let sol = approx::solve(&inst, Algorithm::Bte, &ApproxParams::default()).unwrap();
        for (z, z_star) in sol.caps.as_slice().iter().zip(relax.caps.as_slice()) {
            prop_assert!(*z <= *z_star);
        }
        prop_assert_eq!(&sol.flow, &relax.flow);
    }

    #[test]
    fn su_scales_by_the_documented_factor(seed in any::<u64>(), degree in 1u32..=4) {
        let inst = random_instance(seed, &GeneratorConfig { degree, ..Default::default() }).unwrap();
        let relax = solve_relaxation(&inst).unwrap();
        let sol = approx::solve(&inst, Algorithm::Su, &ApproxParams::default()).unwrap();
        let c = &sol.certificate;
        let lambda = c.lambda.unwrap();
        let p = c.p;
        if p < 1.0 - 1e-12 {
            prop_assert!(lambda >= c.mu);
            prop_assert!(lambda <= c.mu + (c.mu * p / (1.0 - p)).sqrt() + 1e-12);
            if p <= FunctionClass::new(ClassTag::PolynomialDegree(degree)).p_star() {
                prop_assert!(lambda <= 1.0 + c.mu);
            }
            // Capacity cost scales exactly; routing cost stays below p / (1 - mu / lambda) of the relaxation.
            prop_assert!(rel_close(c.capacity_cost, lambda * relax.capacity_cost, 1e-9));
            prop_assert!(c.routing_cost <= p / (1.0 - c.mu / lambda) * relax.cost * (1.0 + 1e-6) + 1e-9);
        }
    }

    #[test]
    fn best_of_two_is_the_cheaper(seed in any::<u64>(), degree in 1u32..=4) {
        let inst = random_instance(seed, &GeneratorConfig { degree, ..Default::default() }).unwrap();
        let p = ApproxParams::default();
        let bte = approx::solve(&inst, Algorithm::Bte, &p).unwrap().certificate;
        let su = approx::solve(&inst, Algorithm::Su, &p).unwrap().certificate;
        let best = approx::solve(&inst, Algorithm::Best2, &p).unwrap().certificate;
        prop_assert!(best.ratio <= bte.ratio.min(su.ratio) + 1e-9);
        prop_assert!(best.ratio <= best.guarantee + 1e-6);
    }

    #[test]
    fn su_bound_is_the_optimized_scaling_bound(p in 0.001..0.999f64) {
        for class in classes() {
            let mu = class.mu;
            let lambda = scale_factor(mu, p);
            let recomputed = p / (1.0 - mu / lambda) + lambda * (1.0 - p);
            prop_assert!(rel_close(recomputed, su_bound_at(mu, p), 1e-12), "{class:?} p={p}");
        }
    }

    #[test]
    fn dispatch_picks_the_smaller_bound(p in 0.0..1.0f64) {
        for class in classes() {
            let (su, bte) = (su_bound_at(class.mu, p), bte_bound_at(class.gamma, p));
            if p <= class.p_star() {
                prop_assert!(su <= bte + 1e-12, "{class:?} p={p}");
            } else {
                prop_assert!(bte <= su + 1e-12, "{class:?} p={p}");
            }
        }
    }
}

#[test]
fn bounds_meet_at_the_crossover() {
    for class in classes() {
        let p = class.p_star();
        let (su, bte) = (su_bound_at(class.mu, p), bte_bound_at(class.gamma, p));
        assert!((su - bte).abs() <= 1e-12, "{class:?}: {su} vs {bte}");
        assert!((su - class.guarantee_best2()).abs() <= 1e-12);
    }
}
