//! Network design instances compiled from 3-CNF formulas.
//!
//! Every literal `l` owns a chain of literal edges `l@1 .. l@K`, one per
//! clause, joined by zero-latency connectors. A variable commodity routes
//! from its source to its sink along either the positive or the negative
//! chain. A clause commodity either takes its clause edge (`S = 4 + x`,
//! price `(eps/2)^2`) or threads through the literal edges of its three
//! literals in that clause. Clause literals are visited in increasing
//! variable order, so connectors only ever lead towards higher variables
//! and no commodity gains a third path.
//!
//! When the formula is satisfiable, buying capacity 1 along every false
//! literal's chain and `2/eps` on every clause edge gives an equilibrium of
//! cost `2 K V + (4 + eps) K`, which is also the relaxed optimum.

use std::fmt;

use crate::equilibrium::verify_wardrop;
use crate::error::{Error, Result};
use crate::latency::LatencyFunction;
use crate::model::{
    capacity_cost, routing_cost, CapacityVector, Cost, EdgeId, FlowAssignment, Instance,
    InstanceBuilder,
};

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const TOL_WITNESS_COST: f64 = 1e-9;
pub const TOL_WITNESS_GAP: f64 = 1e-6;

/// A formula in conjunctive normal form with exactly three literals per clause.
/// Literals are signed 1-based variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<[i32; 3]>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<[i32; 3]>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::InvalidFormula("formula has no clauses".into()));
        }
        if num_vars == 0 || num_vars > i32::MAX as usize {
            return Err(Error::InvalidFormula(format!("invalid variable count {num_vars}")));
        }
        for (k, clause) in clauses.iter().enumerate() {
            for (j, &lit) in clause.iter().enumerate() {
                if lit == 0 || lit.unsigned_abs() as usize > num_vars {
                    return Err(Error::InvalidFormula(format!(
                        "clause {}: literal {lit} out of range 1..={num_vars}",
                        k + 1
                    )));
                }
                // A repeated variable would give variable commodities a shortcut
                // between the two chains; repeated literals are malformed anyway.
                if clause[..j].iter().any(|o| o.unsigned_abs() == lit.unsigned_abs()) {
                    return Err(Error::InvalidFormula(format!(
                        "clause {} mentions variable {} twice",
                        k + 1,
                        lit.unsigned_abs()
                    )));
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[[i32; 3]] {
        &self.clauses
    }

    /// 1-based index of the first clause `assignment` leaves false.
    pub fn first_unsatisfied(&self, assignment: &[bool]) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| !c.iter().any(|&l| literal_value(l, assignment)))
            .map(|k| k + 1)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for [a, b, c] in &self.clauses {
            out.push_str(&format!("{a} {b} {c} 0\n"));
        }
        out
    }
}

fn literal_value(lit: i32, assignment: &[bool]) -> bool {
    let value = assignment[lit.unsigned_abs() as usize - 1];
    if lit > 0 { value } else { !value }
}

/// Reads DIMACS CNF: comment lines start with `c`, the header is
/// `p cnf <vars> <clauses>`, and each clause is three literals closed by `0`.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        let bad = |msg: String| Error::InvalidFormula(format!("line {}: {msg}", lineno + 1));
        if let Some(rest) = line.strip_prefix('p') {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            match fields.as_slice() {
                ["cnf", v, k] if header.is_none() => {
                    let v = v.parse().map_err(|_| bad(format!("bad variable count `{v}`")))?;
                    let k = k.parse().map_err(|_| bad(format!("bad clause count `{k}`")))?;
                    header = Some((v, k));
                }
                _ => return Err(bad(format!("malformed header `{line}`"))),
            }
            continue;
        }
        if header.is_none() {
            return Err(bad("clause before the `p cnf` header".into()));
        }
        for token in line.split_whitespace() {
            let lit: i32 = token.parse().map_err(|_| bad(format!("bad literal `{token}`")))?;
            if lit == 0 {
                let clause: [i32; 3] = current.as_slice().try_into().map_err(|_| {
                    bad(format!("clause {} has {} literals, expected 3", clauses.len() + 1, current.len()))
                })?;
                clauses.push(clause);
                current.clear();
            } else {
                current.push(lit);
            }
        }
    }
    let (num_vars, num_clauses) =
        header.ok_or_else(|| Error::InvalidFormula("missing `p cnf` header".into()))?;
    if !current.is_empty() {
        return Err(Error::InvalidFormula("last clause is not terminated by 0".into()));
    }
    if clauses.len() != num_clauses {
        return Err(Error::InvalidFormula(format!(
            "header announces {num_clauses} clauses, found {}",
            clauses.len()
        )));
    }
    CnfFormula::new(num_vars, clauses)
}

/// A compiled formula with lookup tables from literals and clauses to edges.
#[derive(Debug, Clone)]
pub struct GadgetInstance {
    pub instance: Instance,
    pub epsilon: f64,
    pub formula: CnfFormula,
    /// `literal_edges[chain][k]`: chain `2(i-1)` is `x_i`, chain `2(i-1)+1` is `not x_i`.
    literal_edges: Vec<Vec<EdgeId>>,
    clause_edges: Vec<EdgeId>,
    /// Connectors of chain `c`: source link, links between clauses, sink link.
    chain_links: Vec<Vec<EdgeId>>,
}

fn chain_of(lit: i32) -> usize {
    2 * (lit.unsigned_abs() as usize - 1) + usize::from(lit < 0)
}

fn literal_name(lit: i32) -> String {
    if lit > 0 { format!("x{lit}") } else { format!("~x{}", -lit) }
}

impl GadgetInstance {
    pub fn literal_edge(&self, lit: i32, clause: usize) -> EdgeId {
        self.literal_edges[chain_of(lit)][clause]
    }

    pub fn clause_edge(&self, clause: usize) -> EdgeId {
        self.clause_edges[clause]
    }

    pub fn clause_edges(&self) -> &[EdgeId] {
        &self.clause_edges
    }

    pub fn num_literal_edges(&self) -> usize {
        self.literal_edges.iter().map(Vec::len).sum()
    }

    /// Commodity index of variable `i` (1-based).
    pub fn variable_commodity(&self, i: usize) -> usize {
        i - 1
    }

    pub fn clause_commodity(&self, clause: usize) -> usize {
        self.formula.num_vars() + clause
    }

    /// `2 K V + (4 + eps) K`, the cost of every witness and of the relaxation.
    pub fn witness_cost(&self) -> f64 {
        let (k, v) = (self.formula.num_clauses() as f64, self.formula.num_vars() as f64);
        2.0 * k * v + (4.0 + self.epsilon) * k
    }

    /// Lower bound on the optimum when the formula is unsatisfiable.
    pub fn unsatisfiable_lower_bound(&self) -> f64 {
        self.witness_cost() + 0.125
    }

    /// The capacities and equilibrium flow induced by a satisfying assignment.
    pub fn witness(&self, assignment: &[bool]) -> Result<(FlowAssignment, CapacityVector)> {
        let nu = self.formula.num_vars();
        if assignment.len() != nu {
            return Err(Error::InvalidArgument(format!(
                "assignment has {} values for {nu} variables",
                assignment.len()
            )));
        }
        if let Some(clause) = self.formula.first_unsatisfied(assignment) {
            return Err(Error::UnsatisfiedClause { clause });
        }
        let inst = &self.instance;
        let mut z = vec![0.0; inst.num_edges()];
        let mut flow = FlowAssignment::zeros(inst);
        for (i, &value) in assignment.iter().enumerate() {
            let var = i as i32 + 1;
            let chain = chain_of(if value { -var } else { var });
            let v = flow.commodity_mut(self.variable_commodity(i + 1));
            for &e in &self.literal_edges[chain] {
                z[e.0] = 1.0;
                v[e.0] = 1.0;
            }
            for &e in &self.chain_links[chain] {
                v[e.0] = 1.0;
            }
        }
        for (k, &e) in self.clause_edges.iter().enumerate() {
            z[e.0] = 2.0 / self.epsilon;
            flow.commodity_mut(self.clause_commodity(k))[e.0] = 1.0;
        }
        Ok((flow, CapacityVector::new(z)?))
    }
}

pub fn compile(formula: &CnfFormula, epsilon: f64) -> Result<GadgetInstance> {
    if !(epsilon > 0.0 && epsilon < 0.125) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1/8)")));
    }
    let nu = formula.num_vars();
    let kappa = formula.num_clauses();
    let mut b = InstanceBuilder::new();
    let zero = LatencyFunction::constant(0.0)?;
    let literal = LatencyFunction::monomial(1.0, 1)?;
    let clause_latency = LatencyFunction::affine(4.0, 1.0)?;
    let clause_price = (epsilon / 2.0).powi(2);

    let mut var_ends = Vec::with_capacity(nu);
    for i in 1..=nu {
        var_ends.push((b.add_node(&format!("x{i}.s"))?, b.add_node(&format!("x{i}.t"))?));
    }
    // Literal edge endpoints per chain and clause.
    let mut ends = vec![Vec::with_capacity(kappa); 2 * nu];
    let mut literal_edges = vec![Vec::with_capacity(kappa); 2 * nu];
    for (chain, (ends, edges)) in ends.iter_mut().zip(&mut literal_edges).enumerate() {
        let var = (chain / 2 + 1) as i32;
        let lit = if chain % 2 == 0 { var } else { -var };
        let name = literal_name(lit);
        for k in 1..=kappa {
            let a = b.add_node(&format!("{name}@{k}.a"))?;
            let z = b.add_node(&format!("{name}@{k}.b"))?;
            edges.push(b.add_edge(&format!("{name}@{k}"), a, z, literal.clone(), 1.0)?);
            ends.push((a, z));
        }
    }

    let mut links = 0usize;
    let mut link = |b: &mut InstanceBuilder, from, to| {
        links += 1;
        b.add_edge(&format!("link{links}"), from, to, zero.clone(), 0.0)
    };

    let mut chain_links = vec![Vec::with_capacity(kappa + 1); 2 * nu];
    for (chain, ends) in ends.iter().enumerate() {
        let (s, t) = var_ends[chain / 2];
        chain_links[chain].push(link(&mut b, s, ends[0].0)?);
        for k in 1..kappa {
            chain_links[chain].push(link(&mut b, ends[k - 1].1, ends[k].0)?);
        }
        chain_links[chain].push(link(&mut b, ends[kappa - 1].1, t)?);
    }

    let mut clause_edges = Vec::with_capacity(kappa);
    let mut clause_ends = Vec::with_capacity(kappa);
    for (k, clause) in formula.clauses().iter().enumerate() {
        let s = b.add_node(&format!("c{}.s", k + 1))?;
        let t = b.add_node(&format!("c{}.t", k + 1))?;
        clause_edges.push(b.add_edge(
            &format!("clause{}", k + 1),
            s,
            t,
            clause_latency.clone(),
            clause_price,
        )?);
        let mut lits = *clause;
        lits.sort_by_key(|l| l.unsigned_abs());
        let mut at = s;
        for lit in lits {
            let (a, z) = ends[chain_of(lit)][k];
            link(&mut b, at, a)?;
            at = z;
        }
        link(&mut b, at, t)?;
        clause_ends.push((s, t));
    }

    for (i, &(s, t)) in var_ends.iter().enumerate() {
        b.add_commodity(&format!("x{}", i + 1), s, t, 1.0)?;
    }
    for (k, &(s, t)) in clause_ends.iter().enumerate() {
        b.add_commodity(&format!("c{}", k + 1), s, t, 1.0)?;
    }
    Ok(GadgetInstance {
        instance: b.build()?,
        epsilon,
        formula: formula.clone(),
        literal_edges,
        clause_edges,
        chain_links,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub total: Cost,
    pub expected: f64,
    /// `|total - expected|`, infinite when the total is.
    pub cost_error: f64,
    pub equilibrium_gap: Cost,
    pub cost_ok: bool,
    pub gap_ok: bool,
}

impl WitnessReport {
    pub fn pass(&self) -> bool {
        self.cost_ok && self.gap_ok
    }
}

impl fmt::Display for WitnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: total {} (expected {}, error {:e}), equilibrium gap {}",
            if self.pass() { "pass" } else { "fail" },
            self.total,
            self.expected,
            self.cost_error,
            self.equilibrium_gap
        )
    }
}

/// Checks a candidate against the witness cost formula and the equilibrium condition.
pub fn verify_witness(
    gadget: &GadgetInstance,
    flow: &FlowAssignment,
    caps: &CapacityVector,
) -> WitnessReport {
    let inst = &gadget.instance;
    let expected = gadget.witness_cost();
    let total = match routing_cost(inst, flow, caps) {
        Ok(r) => r + capacity_cost(inst, caps),
        Err(_) => Cost::Infinite,
    };
    let gap = verify_wardrop(inst, caps, flow).unwrap_or(Cost::Infinite);
    let cost_error = match total {
        Cost::Finite(t) => (t - expected).abs(),
        Cost::Infinite => f64::INFINITY,
    };
    WitnessReport {
        total,
        expected,
        cost_error,
        equilibrium_gap: gap,
        cost_ok: cost_error <= TOL_WITNESS_COST * expected.max(1.0),
        gap_ok: gap.finite().is_some_and(|g| g <= TOL_WITNESS_GAP),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{shortest_path, WeightedView};
    use crate::relaxation::solve_relaxation;

    fn single_clause() -> CnfFormula {
        CnfFormula::new(3, vec![[1, -2, 3]]).unwrap()
    }

    #[test]
    fn counts_for_one_clause() {
        let g = compile(&single_clause(), 0.1).unwrap();
        assert_eq!(g.num_literal_edges(), 6);
        assert_eq!(g.clause_edges().len(), 1);
        assert_eq!(g.instance.num_commodities(), 4);
    }

    #[test]
    fn counts_for_two_clauses() {
        let f = CnfFormula::new(2, vec![[1, 2, -1], [1, 2, -2]]);
        assert!(f.is_err(), "repeated variables are rejected");
        let f = CnfFormula::new(3, vec![[1, 2, 3], [-1, -2, 3]]).unwrap();
        let g = compile(&f, 0.1).unwrap();
        assert_eq!(g.num_literal_edges(), 12);
        assert_eq!(g.clause_edges().len(), 2);
        assert_eq!(g.instance.num_commodities(), 5);
    }

    #[test]
    fn empty_and_malformed_formulas() {
        assert!(CnfFormula::new(3, vec![]).is_err());
        assert!(CnfFormula::new(3, vec![[1, 2, 4]]).is_err());
        assert!(CnfFormula::new(3, vec![[1, 0, 2]]).is_err());
        assert!(CnfFormula::new(3, vec![[1, 1, 2]]).is_err());
    }

    #[test]
    fn epsilon_range() {
        for eps in [0.0, 0.125, -1.0, f64::NAN] {
            assert!(compile(&single_clause(), eps).is_err());
        }
    }

    #[test]
    fn witness_for_all_true() {
        let g = compile(&single_clause(), 0.1).unwrap();
        let (flow, caps) = g.witness(&[true, true, true]).unwrap();
        let report = verify_witness(&g, &flow, &caps);
        assert!(report.pass(), "{report}");
        assert!((report.total.value() - 10.1).abs() < 1e-12);
        let clause = g.clause_edge(0);
        assert_eq!(flow.commodity(g.clause_commodity(0))[clause.0], 1.0);
    }

    #[test]
    fn unsatisfying_assignment() {
        let g = compile(&single_clause(), 0.1).unwrap();
        assert!(matches!(g.witness(&[false, true, false]), Err(Error::UnsatisfiedClause { clause: 1 })));
    }

    #[test]
    fn rerouted_clause_commodity_fails() {
        let g = compile(&single_clause(), 0.1).unwrap();
        let (mut flow, caps) = g.witness(&[true, true, true]).unwrap();
        let k = g.clause_commodity(0);
        let v = flow.commodity_mut(k);
        v.iter_mut().for_each(|x| *x = 0.0);
        let inst = &g.instance;
        let (s, t) = (inst.commodities()[k].source, inst.commodities()[k].sink);
        // With the clause edge disabled the only route left is the literal path.
        let clause = g.clause_edge(0);
        let view = WeightedView::from_fn(inst, |e, _| (e != clause).then_some(1.0)).unwrap();
        let path = shortest_path(&view, s, t).unwrap();
        assert_eq!(path.edges.iter().filter(|e| inst.edge(**e).is_strict()).count(), 3);
        for e in path.edges {
            v[e.0] = 1.0;
        }
        let report = verify_witness(&g, &flow, &caps);
        assert!(!report.pass());
    }

    #[test]
    fn halved_clause_capacity_breaks_the_cost() {
        let g = compile(&single_clause(), 0.1).unwrap();
        let (flow, caps) = g.witness(&[true, true, true]).unwrap();
        let mut z = caps.as_slice().to_vec();
        z[g.clause_edge(0).0] /= 2.0;
        let report = verify_witness(&g, &flow, &CapacityVector::new(z).unwrap());
        assert!(!report.cost_ok);
    }

    #[test]
    fn relaxation_matches_the_formula() {
        let f = CnfFormula::new(4, vec![[1, -2, 3], [-1, 2, 4], [2, -3, -4]]).unwrap();
        let g = compile(&f, 0.05).unwrap();
        let relax = solve_relaxation(&g.instance).unwrap();
        assert!((relax.cost - g.witness_cost()).abs() <= 1e-9 * g.witness_cost());
    }

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np cnf 3 2\n1 -2 3 0\n-1 2\n-3 0\n";
        let f = parse_dimacs(text).unwrap();
        assert_eq!(f.clauses(), &[[1, -2, 3], [-1, 2, -3]]);
        assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
        assert!(parse_dimacs("p cnf 3 1\n1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 3 2\n1 2 3 0\n").is_err());
        assert!(parse_dimacs("1 2 3 0\n").is_err());
    }
}
