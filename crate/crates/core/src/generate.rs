//! Seeded random instances for property tests and the oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::latency::LatencyFunction;
use crate::model::{capacity_cost, Instance, InstanceBuilder, NodeId};
use crate::relaxation::solve_relaxation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub max_nodes: usize,
    pub max_edges: usize,
    pub max_commodities: usize,
    /// Degree of every strict latency.
    pub degree: u32,
    pub single_sink: bool,
    /// Without this, some edges get constant latencies.
    pub strict_only: bool,
    /// Attach a budget drawn around the relaxed capacity spend.
    pub with_budget: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            max_nodes: 8,
            max_edges: 20,
            max_commodities: 4,
            degree: 1,
            single_sink: false,
            strict_only: false,
            with_budget: false,
        }
    }
}

fn strict_latency(rng: &mut ChaCha8Rng, degree: u32) -> Result<LatencyFunction> {
    let mut coeffs = vec![0.0; degree as usize + 1];
    if rng.random_bool(0.7) {
        coeffs[0] = rng.random_range(0.0..3.0);
    }
    for c in coeffs.iter_mut().skip(1).take(degree.saturating_sub(1) as usize) {
        if rng.random_bool(0.3) {
            *c = rng.random_range(0.0..1.0);
        }
    }
    coeffs[degree as usize] = rng.random_range(0.1..3.0);
    LatencyFunction::polynomial(coeffs)
}

/// A random connected instance. Nodes are laid out in a random order with a
/// backbone path through it, so every commodity routes from an earlier to a
/// later node and always has a path.
pub fn random_instance(seed: u64, cfg: &GeneratorConfig) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=cfg.max_nodes.max(2));
    let m = rng.random_range((n - 1).max(1)..=cfg.max_edges.max(n - 1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut b = InstanceBuilder::new();
    for i in 0..n {
        b.add_node(&format!("n{i}"))?;
    }
    let mut arcs: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    while arcs.len() < m {
        let (u, w) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != w {
            arcs.push((u, w));
        }
    }
    for (i, &(u, w)) in arcs.iter().enumerate() {
        let latency = if !cfg.strict_only && rng.random_bool(0.15) {
            LatencyFunction::constant(rng.random_range(0.0..5.0))?
        } else {
            strict_latency(&mut rng, cfg.degree)?
        };
        let price = if latency.is_strict() { rng.random_range(0.1..3.0) } else { 0.0 };
        b.add_edge(&format!("e{i}"), NodeId(u), NodeId(w), latency, price)?;
    }

    let k = rng.random_range(1..=cfg.max_commodities.max(1));
    for c in 0..k {
        let (s, t) = if cfg.single_sink {
            (order[rng.random_range(0..n - 1)], order[n - 1])
        } else {
            let i = rng.random_range(0..n - 1);
            let j = rng.random_range(i + 1..n);
            (order[i], order[j])
        };
        b.add_commodity(&format!("k{c}"), NodeId(s), NodeId(t), rng.random_range(0.2..3.0))?;
    }
    let inst = b.build()?;
    if !cfg.with_budget {
        return Ok(inst);
    }
    let spend = capacity_cost(&inst, &solve_relaxation(&inst)?.caps);
    let factor = rng.random_range(0.3..2.0);
    inst.with_budget(if spend > 0.0 { factor * spend } else { factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig::default();
        assert_eq!(random_instance(7, &cfg).unwrap(), random_instance(7, &cfg).unwrap());
        assert_ne!(random_instance(7, &cfg).unwrap(), random_instance(8, &cfg).unwrap());
    }

    #[test]
    fn respects_limits() {
        let cfg = GeneratorConfig { degree: 4, single_sink: true, strict_only: true, ..Default::default() };
        for seed in 0..50 {
            let inst = random_instance(seed, &cfg).unwrap();
            assert!(inst.num_edges() <= 20);
            assert!(inst.num_commodities() <= 4);
            assert_eq!(inst.sinks().len(), 1);
            assert_eq!(inst.strict_edge_count(), inst.num_edges());
            assert_eq!(inst.max_degree(), 4);
        }
    }

    #[test]
    fn budgets_are_positive() {
        let cfg = GeneratorConfig { with_budget: true, ..Default::default() };
        for seed in 0..20 {
            assert!(random_instance(seed, &cfg).unwrap().budget().unwrap() > 0.0);
        }
    }
}
