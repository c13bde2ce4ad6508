//! Shortest paths under non-negative edge weights.
//!
//! Everything is computed from a reverse Dijkstra into the sink. When a node
//! is settled its tree edge is the lowest-index outgoing edge that is tight
//! towards an already settled node, so results are deterministic and the
//! pointers never form a cycle, even across zero-weight edges.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::model::{Cost, Edge, EdgeId, Instance, NodeId};

/// Relative slack used to decide that an edge is tight.
const TIGHT_TOL: f64 = 1e-12;

/// Edge weights over an instance; `None` marks an unusable edge.
#[derive(Debug, Clone)]
pub struct WeightedView<'a> {
    inst: &'a Instance,
    weights: Vec<Option<f64>>,
}

impl<'a> WeightedView<'a> {
    pub fn new(inst: &'a Instance, weights: Vec<Option<f64>>) -> Result<Self> {
        if weights.len() != inst.num_edges() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} edges",
                weights.len(),
                inst.num_edges()
            )));
        }
        if let Some(bad) = weights.iter().flatten().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("edge weight {bad} is not a non-negative real")));
        }
        Ok(WeightedView { inst, weights })
    }

    pub fn from_fn(inst: &'a Instance, f: impl Fn(EdgeId, &Edge) -> Option<f64>) -> Result<Self> {
        let weights = inst.edges().iter().enumerate().map(|(i, e)| f(EdgeId(i), e)).collect();
        Self::new(inst, weights)
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn weight(&self, e: EdgeId) -> Option<f64> {
        self.weights[e.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    pub edges: Vec<EdgeId>,
    pub dist: Cost,
}

/// Reverse shortest-path tree into one sink.
#[derive(Debug, Clone)]
pub struct PathTree {
    pub sink: NodeId,
    /// Next edge towards the sink, `None` at the sink and at disconnected nodes.
    pub next: Vec<Option<EdgeId>>,
    pub dist: Vec<Cost>,
}

impl PathTree {
    pub fn on_tree(&self, num_edges: usize) -> Vec<bool> {
        let mut flags = vec![false; num_edges];
        for e in self.next.iter().flatten() {
            flags[e.0] = true;
        }
        flags
    }

    /// The tree path from `source` to the sink, `None` if disconnected.
    pub fn path_from(&self, inst: &Instance, source: NodeId) -> Option<Vec<EdgeId>> {
        if !self.dist[source.0].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut node = source;
        while node != self.sink {
            let e = self.next[node.0]?;
            path.push(e);
            node = inst.edge(e).head;
        }
        Some(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn check_node(inst: &Instance, node: NodeId) -> Result<()> {
    if node.0 < inst.num_nodes() {
        Ok(())
    } else {
        Err(Error::BadNode(format!("#{}", node.0)))
    }
}

pub fn shortest_path_tree(view: &WeightedView<'_>, sink: NodeId) -> Result<PathTree> {
    let inst = view.inst;
    check_node(inst, sink)?;
    let n = inst.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut next = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[sink.0] = 0.0;
    heap.push(Reverse((Key(0.0), sink.0)));

    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if settled[u] || d > dist[u] {
            continue;
        }
        settled[u] = true;
        if u != sink.0 {
            let slack = TIGHT_TOL * d.max(1.0);
            next[u] = inst
                .out_edges(NodeId(u))
                .iter()
                .copied()
                .filter(|&e| {
                    let head = inst.edge(e).head.0;
                    settled[head]
                        && view.weight(e).is_some_and(|w| dist[head] + w <= d + slack)
                })
                .min();
        }
        for &e in inst.in_edges(NodeId(u)) {
            let Some(w) = view.weight(e) else { continue };
            let tail = inst.edge(e).tail.0;
            let candidate = d + w;
            if !settled[tail] && candidate < dist[tail] {
                dist[tail] = candidate;
                heap.push(Reverse((Key(candidate), tail)));
            }
        }
    }

    let dist = dist
        .into_iter()
        .map(|d| if d.is_finite() { Cost::Finite(d) } else { Cost::Infinite })
        .collect();
    Ok(PathTree { sink, next, dist })
}

/// A minimum-weight path; `(empty, Infinite)` when the sink is unreachable.
pub fn shortest_path(view: &WeightedView<'_>, source: NodeId, sink: NodeId) -> Result<ShortestPath> {
    check_node(view.inst, source)?;
    let tree = shortest_path_tree(view, sink)?;
    Ok(match tree.path_from(view.inst, source) {
        Some(edges) => ShortestPath { edges, dist: tree.dist[source.0] },
        None => ShortestPath { edges: Vec::new(), dist: Cost::Infinite },
    })
}

/// Shortest path for every commodity, one tree per distinct sink.
pub(crate) fn commodity_paths(view: &WeightedView<'_>) -> Result<Vec<ShortestPath>> {
    let inst = view.inst;
    let mut trees: Vec<PathTree> = Vec::new();
    let mut out = Vec::with_capacity(inst.num_commodities());
    for c in inst.commodities() {
        let tree = match trees.iter().position(|t| t.sink == c.sink) {
            Some(i) => &trees[i],
            None => {
                trees.push(shortest_path_tree(view, c.sink)?);
                trees.last().unwrap()
            }
        };
        out.push(match tree.path_from(inst, c.source) {
            Some(edges) => ShortestPath { edges, dist: tree.dist[c.source.0] },
            None => ShortestPath { edges: Vec::new(), dist: Cost::Infinite },
        });
    }
    Ok(out)
}
