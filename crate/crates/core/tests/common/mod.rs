//! Helpers shared by the integration test binaries.
#![allow(dead_code)]

use cndp::gadgets::CnfFormula;
use cndp::model::Instance;
use cndp::NodeId;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// All assignments (index `i` holds variable `i + 1`) satisfying `formula`,
/// by exhaustive enumeration.
pub fn satisfying_assignments(formula: &CnfFormula) -> Vec<Vec<bool>> {
    let n = formula.num_vars();
    (0u32..1 << n)
        .map(|mask| (0..n).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|a| formula.first_unsatisfied(a).is_none())
        .collect()
}

/// A random 3-CNF with three distinct variables per clause.
pub fn random_formula(rng: &mut ChaCha8Rng, num_vars: usize, num_clauses: usize) -> CnfFormula {
    let clauses = (0..num_clauses)
        .map(|_| {
            let vars = sample(rng, num_vars, 3);
            let mut clause = [0i32; 3];
            for (slot, v) in clause.iter_mut().zip(vars.iter()) {
                let lit = v as i32 + 1;
                *slot = if rng.random_bool(0.5) { lit } else { -lit };
            }
            clause
        })
        .collect();
    CnfFormula::new(num_vars, clauses).expect("generated clauses are valid")
}

/// Draws formulas until one is satisfiable, returning it with its models.
pub fn random_satisfiable(
    seed: u64,
    max_vars: usize,
    max_clauses: usize,
) -> (CnfFormula, Vec<Vec<bool>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(3..=max_vars);
        let m = rng.random_range(1..=max_clauses);
        let formula = random_formula(&mut rng, n, m);
        let models = satisfying_assignments(&formula);
        if !models.is_empty() {
            return (formula, models);
        }
    }
}

/// Every simple path from `source` to `sink`, as edge index lists.
pub fn simple_paths(inst: &Instance, source: NodeId, sink: NodeId) -> Vec<Vec<usize>> {
    fn walk(
        inst: &Instance,
        at: NodeId,
        sink: NodeId,
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == sink {
            out.push(path.clone());
            return;
        }
        for &e in inst.out_edges(at) {
            let head = inst.edge(e).head;
            if !seen[head.0] {
                seen[head.0] = true;
                path.push(e.0);
                walk(inst, head, sink, seen, path, out);
                path.pop();
                seen[head.0] = false;
            }
        }
    }
    let mut seen = vec![false; inst.num_nodes()];
    seen[source.0] = true;
    let mut out = Vec::new();
    walk(inst, source, sink, &mut seen, &mut Vec::new(), &mut out);
    out
}

pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { failure_persistence: None, ..proptest::test_runner::Config::with_cases(n) }
}
