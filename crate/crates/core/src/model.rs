//! Instances, flows, capacities, and the cost functionals.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::latency::{FunctionClass, LatencyFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub tail: NodeId,
    pub head: NodeId,
    pub latency: LatencyFunction,
    /// Price per unit of capacity.
    pub price: f64,
}

impl Edge {
    pub fn is_strict(&self) -> bool {
        self.latency.is_strict()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub id: String,
    pub source: NodeId,
    pub sink: NodeId,
    pub demand: f64,
}

/// A validated network design instance. Immutable once built.
#[derive(Debug, Clone)]
pub struct Instance {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    commodities: Vec<Commodity>,
    budget: Option<f64>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    node_index: HashMap<String, NodeId>,
    edge_index: HashMap<String, EdgeId>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.commodities == other.commodities
            && self.budget == other.budget
    }
}

impl Instance {
    pub fn node_names(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.nodes[node.0]
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edge_by_id(&self, id: &str) -> Option<EdgeId> {
        self.edge_index.get(id).copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn commodity_by_id(&self, id: &str) -> Option<usize> {
        self.commodities.iter().position(|c| c.id == id)
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn budget(&self) -> Option<f64> {
        self.budget
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node.0]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[node.0]
    }

    pub fn with_budget(&self, budget: f64) -> Result<Instance> {
        check_budget(budget)?;
        let mut inst = self.clone();
        inst.budget = Some(budget);
        Ok(inst)
    }

    pub fn strict_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_strict()).count()
    }

    pub fn max_degree(&self) -> usize {
        self.edges.iter().map(|e| e.latency.degree()).max().unwrap_or(0)
    }

    /// The tightest polynomial class containing every latency of the instance.
    pub fn inferred_class(&self) -> FunctionClass {
        FunctionClass::polynomial(self.max_degree() as u32)
    }

    /// Distinct commodity sinks in first-seen order.
    pub fn sinks(&self) -> Vec<NodeId> {
        let mut sinks = Vec::new();
        for c in &self.commodities {
            if !sinks.contains(&c.sink) {
                sinks.push(c.sink);
            }
        }
        sinks
    }

    pub fn total_demand(&self) -> f64 {
        self.commodities.iter().map(|c| c.demand).sum()
    }
}

/// Incremental construction of an [`Instance`]; `build` checks every invariant.
#[derive(Debug, Default)]
pub struct InstanceBuilder {
    nodes: Vec<String>,
    node_index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, EdgeId>,
    commodities: Vec<Commodity>,
    budget: Option<f64>,
}

impl InstanceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str) -> Result<NodeId> {
        if self.node_index.contains_key(name) {
            return Err(Error::InvalidInstance(format!("duplicate node `{name}`")));
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(name.to_owned());
        self.node_index.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.node_index.get(name).copied().ok_or_else(|| Error::BadNode(name.to_owned()))
    }

    pub fn add_edge(
        &mut self,
        id: &str,
        tail: NodeId,
        head: NodeId,
        latency: LatencyFunction,
        price: f64,
    ) -> Result<EdgeId> {
        if self.edge_index.contains_key(id) {
            return Err(Error::InvalidInstance(format!("duplicate edge id `{id}`")));
        }
        for n in [tail, head] {
            if n.0 >= self.nodes.len() {
                return Err(Error::BadNode(format!("#{}", n.0)));
            }
        }
        if tail == head {
            return Err(Error::InvalidInstance(format!("edge `{id}` is a self-loop")));
        }
        if !price.is_finite() || price < 0.0 {
            return Err(Error::InvalidInstance(format!(
                "edge `{id}` has invalid price {price}"
            )));
        }
        if latency.is_strict() && price == 0.0 {
            return Err(Error::InvalidInstance(format!(
                "edge `{id}` has a strictly increasing latency but zero price"
            )));
        }
        let eid = EdgeId(self.edges.len());
        self.edges.push(Edge { id: id.to_owned(), tail, head, latency, price });
        self.edge_index.insert(id.to_owned(), eid);
        Ok(eid)
    }

    pub fn add_commodity(
        &mut self,
        id: &str,
        source: NodeId,
        sink: NodeId,
        demand: f64,
    ) -> Result<usize> {
        if self.commodities.iter().any(|c| c.id == id) {
            return Err(Error::InvalidInstance(format!("duplicate commodity id `{id}`")));
        }
        for n in [source, sink] {
            if n.0 >= self.nodes.len() {
                return Err(Error::BadNode(format!("#{}", n.0)));
            }
        }
        if source == sink {
            return Err(Error::InvalidInstance(format!(
                "commodity `{id}` has identical source and sink"
            )));
        }
        if !(demand.is_finite() && demand > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "commodity `{id}` has non-positive demand {demand}"
            )));
        }
        self.commodities.push(Commodity { id: id.to_owned(), source, sink, demand });
        Ok(self.commodities.len() - 1)
    }

    pub fn budget(&mut self, budget: f64) -> Result<()> {
        check_budget(budget)?;
        self.budget = Some(budget);
        Ok(())
    }

    pub fn build(self) -> Result<Instance> {
        let n = self.nodes.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            out_edges[e.tail.0].push(EdgeId(i));
            in_edges[e.head.0].push(EdgeId(i));
        }
        let inst = Instance {
            nodes: self.nodes,
            edges: self.edges,
            commodities: self.commodities,
            budget: self.budget,
            out_edges,
            in_edges,
            node_index: self.node_index,
            edge_index: self.edge_index,
        };
        for (k, c) in inst.commodities.iter().enumerate() {
            if !reachable(&inst, c.source, c.sink) {
                return Err(Error::InvalidInstance(format!(
                    "commodity {k} (`{}`) has no path from `{}` to `{}`",
                    c.id,
                    inst.node_name(c.source),
                    inst.node_name(c.sink)
                )));
            }
        }
        Ok(inst)
    }
}

fn check_budget(budget: f64) -> Result<()> {
    if budget > 0.0 && budget.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(format!("budget must be positive, got {budget}")))
    }
}

fn reachable(inst: &Instance, from: NodeId, to: NodeId) -> bool {
    let mut seen = vec![false; inst.num_nodes()];
    let mut queue = VecDeque::from([from]);
    seen[from.0] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            return true;
        }
        for &e in inst.out_edges(u) {
            let w = inst.edge(e).head;
            if !seen[w.0] {
                seen[w.0] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// A cost that may be infinite because flow crosses a zero-capacity edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cost {
    Finite(f64),
    Infinite,
}

impl Cost {
    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    /// The value as `f64`, with `Infinite` mapped to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match self {
            Cost::Finite(v) => *v,
            Cost::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Cost::Finite(v) => Some(*v),
            Cost::Infinite => None,
        }
    }
}

impl std::ops::Add<f64> for Cost {
    type Output = Cost;

    fn add(self, rhs: f64) -> Cost {
        match self {
            Cost::Finite(v) => Cost::Finite(v + rhs),
            Cost::Infinite => Cost::Infinite,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cost::Finite(v) => serializer.serialize_f64(*v),
            Cost::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(Cost::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Cost::Infinite),
            Raw::Str(s) => Err(de::Error::custom(format!("expected a number or \"inf\", got `{s}`"))),
        }
    }
}

/// Installed capacities `z_e >= 0`, indexed by edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVector(Vec<f64>);

impl CapacityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|z| !z.is_finite() || **z < 0.0) {
            return Err(Error::InvalidArgument(format!("capacity {bad} is not a non-negative real")));
        }
        Ok(CapacityVector(values))
    }

    pub fn zeros(num_edges: usize) -> Self {
        CapacityVector(vec![0.0; num_edges])
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.0[e.0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> CapacityVector {
        CapacityVector(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-commodity edge flows; the aggregate is always recomputed from them.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    per_commodity: Vec<Vec<f64>>,
}

impl FlowAssignment {
    pub fn new(per_commodity: Vec<Vec<f64>>) -> Self {
        FlowAssignment { per_commodity }
    }

    pub fn zeros(inst: &Instance) -> Self {
        FlowAssignment { per_commodity: vec![vec![0.0; inst.num_edges()]; inst.num_commodities()] }
    }

    /// Routes each commodity's full demand along the given edge path.
    pub fn from_paths(inst: &Instance, paths: &[Vec<EdgeId>]) -> Self {
        let mut flow = Self::zeros(inst);
        for (k, path) in paths.iter().enumerate() {
            let d = inst.commodities()[k].demand;
            for e in path {
                flow.per_commodity[k][e.0] += d;
            }
        }
        flow
    }

    pub fn commodity(&self, k: usize) -> &[f64] {
        &self.per_commodity[k]
    }

    pub fn commodity_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.per_commodity[k]
    }

    pub fn num_commodities(&self) -> usize {
        self.per_commodity.len()
    }

    pub fn aggregate(&self) -> Vec<f64> {
        let m = self.per_commodity.first().map_or(0, Vec::len);
        let mut total = vec![0.0; m];
        for flows in &self.per_commodity {
            for (t, v) in total.iter_mut().zip(flows) {
                *t += v;
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    /// Net outflow at `node` differs from the required value.
    Imbalance { node: NodeId, expected: f64, actual: f64 },
    NegativeFlow { edge: EdgeId, value: f64 },
    Shape(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub commodity: Option<usize>,
    pub kind: ViolationKind,
}

impl Violation {
    pub fn describe(&self, inst: &Instance) -> String {
        let who = self.commodity.map_or_else(String::new, |k| {
            format!("commodity `{}`: ", inst.commodities()[k].id)
        });
        match &self.kind {
            ViolationKind::Imbalance { node, expected, actual } => format!(
                "{who}net outflow at node `{}` is {actual}, expected {expected}",
                inst.node_name(*node)
            ),
            ViolationKind::NegativeFlow { edge, value } => {
                format!("{who}negative flow {value} on edge `{}`", inst.edge(*edge).id)
            }
            ViolationKind::Shape(msg) => format!("{who}{msg}"),
        }
    }
}

/// Flow-conservation tolerance for a commodity of demand `d`.
pub fn tol_flow(demand: f64) -> f64 {
    1e-8 * demand.max(1.0)
}

/// Every conservation, demand, and sign violation of `flow`; empty iff feasible.
pub fn validate_flow(inst: &Instance, flow: &FlowAssignment) -> Vec<Violation> {
    let mut violations = Vec::new();
    if flow.num_commodities() != inst.num_commodities() {
        violations.push(Violation {
            commodity: None,
            kind: ViolationKind::Shape(format!(
                "flow has {} commodities, instance has {}",
                flow.num_commodities(),
                inst.num_commodities()
            )),
        });
        return violations;
    }
    for (k, c) in inst.commodities().iter().enumerate() {
        let v = flow.commodity(k);
        if v.len() != inst.num_edges() {
            violations.push(Violation {
                commodity: Some(k),
                kind: ViolationKind::Shape(format!(
                    "flow covers {} edges, instance has {}",
                    v.len(),
                    inst.num_edges()
                )),
            });
            continue;
        }
        let tol = tol_flow(c.demand);
        for (i, &x) in v.iter().enumerate() {
            if x.is_nan() || x < -tol {
                violations.push(Violation {
                    commodity: Some(k),
                    kind: ViolationKind::NegativeFlow { edge: EdgeId(i), value: x },
                });
            }
        }
        let mut net = vec![0.0; inst.num_nodes()];
        for (e, &x) in inst.edges().iter().zip(v) {
            net[e.tail.0] += x;
            net[e.head.0] -= x;
        }
        for (node, &actual) in net.iter().enumerate() {
            let node = NodeId(node);
            let expected = if node == c.source {
                c.demand
            } else if node == c.sink {
                -c.demand
            } else {
                0.0
            };
            if (actual - expected).is_nan() || (actual - expected).abs() > tol {
                violations.push(Violation {
                    commodity: Some(k),
                    kind: ViolationKind::Imbalance { node, expected, actual },
                });
            }
        }
    }
    violations
}

fn ensure_feasible(inst: &Instance, flow: &FlowAssignment) -> Result<()> {
    let violations = validate_flow(inst, flow);
    match violations.first() {
        None => Ok(()),
        Some(v) => Err(Error::FlowInfeasible(v.describe(inst))),
    }
}

/// Latency of one edge at aggregate load `v` and capacity `z`, `None` when infinite.
#[inline]
pub fn edge_latency(edge: &Edge, v: f64, z: f64) -> Option<f64> {
    if !edge.is_strict() {
        Some(edge.latency.at(0.0))
    } else if z > 0.0 {
        Some(edge.latency.at(v / z))
    } else {
        None
    }
}

/// `sum_e S_e(v_e / z_e) v_e` over the aggregate of a feasible flow.
pub fn routing_cost(inst: &Instance, flow: &FlowAssignment, caps: &CapacityVector) -> Result<Cost> {
    ensure_feasible(inst, flow)?;
    Ok(routing_cost_of_loads(inst, &flow.aggregate(), caps))
}

/// Routing cost of aggregate edge loads, without a feasibility check.
pub fn routing_cost_of_loads(inst: &Instance, loads: &[f64], caps: &CapacityVector) -> Cost {
    let mut total = 0.0;
    for (i, (edge, &v)) in inst.edges().iter().zip(loads).enumerate() {
        if v <= 0.0 {
            continue;
        }
        match edge_latency(edge, v, caps.get(EdgeId(i))) {
            Some(s) => total += s * v,
            None => return Cost::Infinite,
        }
    }
    Cost::Finite(total)
}

/// `sum_e z_e l_e`.
pub fn capacity_cost(inst: &Instance, caps: &CapacityVector) -> f64 {
    inst.edges().iter().zip(caps.as_slice()).map(|(e, z)| e.price * z).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Relax,
    SingleSink,
    Bte,
    Su,
    Best2,
    Budgeted,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Algorithm::Relax => "relax",
            Algorithm::SingleSink => "single-sink",
            Algorithm::Bte => "bte",
            Algorithm::Su => "su",
            Algorithm::Best2 => "best2",
            Algorithm::Budgeted => "budgeted",
        };
        f.write_str(s)
    }
}

/// Realized cost split of a solution, checked against the relaxation lower bound.
///
/// For the budgeted algorithm `ratio` and `relaxation_cost` refer to routing
/// cost only, since capacity spending is a constraint there rather than a cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<Algorithm>,
    pub class: String,
    pub mu: f64,
    pub gamma: f64,
    pub relaxation_cost: f64,
    pub routing_cost: f64,
    pub capacity_cost: f64,
    pub total: f64,
    pub ratio: f64,
    /// Class-wide guarantee of the algorithm.
    pub guarantee: f64,
    /// The sharper bound for this instance's routing fraction `p`.
    pub bound_at_p: f64,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    pub equilibrium_gap: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn within_guarantee(&self, tol: f64) -> bool {
        self.ratio <= self.guarantee + tol && self.ratio <= self.bound_at_p + tol
    }

    pub fn cost_split_consistent(&self) -> bool {
        (self.total - (self.routing_cost + self.capacity_cost)).abs()
            <= 1e-9 * self.total.abs().max(1.0)
    }
}
