//! Lower-bounding relaxations: capacities chosen freely per unit of flow,
//! with the equilibrium constraint dropped.
//!
//! For a strict edge carrying flow `v` at capacity `z`, the per-unit cost
//! `S(v/z) + l z / v` depends only on the load ratio `x = v/z` and is
//! minimized where `x^2 S'(x) = l`. Writing `u` for that ratio, every unit
//! of flow pays `w = S(u) + l/u` on the edge, so the relaxed problem is a
//! shortest-path problem under `w`.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::model::{
    capacity_cost, routing_cost_of_loads, CapacityVector, Cost, EdgeId, FlowAssignment, Instance,
};
use crate::paths::{commodity_paths, shortest_path_tree, WeightedView};

/// Optimal relaxed solution: unsplittable shortest-path routing and the
/// capacities that make every used strict edge run at its ideal ratio.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub flow: FlowAssignment,
    pub caps: CapacityVector,
    /// `sum_e w_e v_e`, the optimal relaxed cost.
    pub cost: f64,
    pub routing_cost: f64,
    pub capacity_cost: f64,
    /// Ideal load ratio per strict edge, `None` on constant edges.
    pub ratios: Vec<Option<f64>>,
    pub weights: Vec<f64>,
    pub paths: Vec<Vec<EdgeId>>,
}

impl RelaxedSolution {
    /// Routing share `C^R / C` of the relaxed cost; 1 when the cost vanishes.
    pub fn routing_fraction(&self) -> f64 {
        if self.cost > 0.0 {
            (self.routing_cost / self.cost).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }
}

/// Per-edge ideal ratios and per-unit weights.
pub fn relaxation_weights(inst: &Instance) -> Result<(Vec<Option<f64>>, Vec<f64>)> {
    let mut ratios = Vec::with_capacity(inst.num_edges());
    let mut weights = Vec::with_capacity(inst.num_edges());
    for edge in inst.edges() {
        if edge.is_strict() {
            let u = edge.latency.solve_u(edge.price)?;
            ratios.push(Some(u));
            weights.push(edge.latency.at(u) + edge.price / u);
        } else {
            ratios.push(None);
            weights.push(edge.latency.at(0.0));
        }
    }
    Ok((ratios, weights))
}

fn assemble(
    inst: &Instance,
    ratios: Vec<Option<f64>>,
    weights: Vec<f64>,
    paths: Vec<Vec<EdgeId>>,
) -> Result<RelaxedSolution> {
    let flow = FlowAssignment::from_paths(inst, &paths);
    let loads = flow.aggregate();
    let z: Vec<f64> = loads
        .iter()
        .zip(&ratios)
        .map(|(&v, u)| match u {
            Some(u) if v > 0.0 => v / u,
            _ => 0.0,
        })
        .collect();
    let caps = CapacityVector::new(z)?;
    let cost = loads.iter().zip(&weights).map(|(v, w)| v * w).sum();
    let routing_cost = routing_cost_of_loads(inst, &loads, &caps)
        .finite()
        .ok_or_else(|| Error::NumericalFailure("relaxed routing cost is infinite".into()))?;
    let capacity_cost = capacity_cost(inst, &caps);
    Ok(RelaxedSolution { flow, caps, cost, routing_cost, capacity_cost, ratios, weights, paths })
}

pub fn solve_relaxation(inst: &Instance) -> Result<RelaxedSolution> {
    let (ratios, weights) = relaxation_weights(inst)?;
    let view = WeightedView::new(inst, weights.iter().copied().map(Some).collect())?;
    let mut paths = Vec::with_capacity(inst.num_commodities());
    for (k, sp) in commodity_paths(&view)?.into_iter().enumerate() {
        if !sp.dist.is_finite() {
            return Err(Error::NoFinitePath { commodity: k });
        }
        paths.push(sp.edges);
    }
    let sol = assemble(inst, ratios, weights, paths)?;
    debug!("relaxation cost {} (routing {}, capacity {})", sol.cost, sol.routing_cost, sol.capacity_cost);
    Ok(sol)
}

/// Exact solution when every commodity shares one sink: route along a single
/// shortest-path tree so that tree edges carry the summed demand behind them.
pub fn solve_single_sink(inst: &Instance) -> Result<RelaxedSolution> {
    let sinks = inst.sinks();
    if sinks.len() != 1 {
        return Err(Error::WrongShape(format!("expected a single sink, found {}", sinks.len())));
    }
    let (ratios, weights) = relaxation_weights(inst)?;
    let view = WeightedView::new(inst, weights.iter().copied().map(Some).collect())?;
    let tree = shortest_path_tree(&view, sinks[0])?;
    let paths = inst
        .commodities()
        .iter()
        .enumerate()
        .map(|(k, c)| tree.path_from(inst, c.source).ok_or(Error::NoFinitePath { commodity: k }))
        .collect::<Result<Vec<_>>>()?;
    assemble(inst, ratios, weights, paths)
}

pub const RHO_MIN: f64 = 1e-6;
pub const RHO_MAX: f64 = 1e6;
pub const RHO_GRID_POINTS: usize = 61;
pub const RHO_BISECTION_STEPS: usize = 80;
pub const TOL_BUDGET: f64 = 1e-6;

/// Relaxed solution of the budget-constrained problem.
#[derive(Debug, Clone)]
pub struct BudgetedRelaxation {
    pub flow: FlowAssignment,
    pub caps: CapacityVector,
    /// `sum_e S_e(v_e/z_e) v_e` at the relaxed solution.
    pub routing_cost: f64,
    pub spent: f64,
    pub budget: f64,
    /// Multiplier on the budget constraint at the chosen routing.
    pub multiplier: Option<f64>,
    /// Best Lagrangian dual value seen; no budget-feasible solution routes cheaper.
    pub dual_bound: f64,
    pub candidates: usize,
    /// Set when the budget could not be matched exactly and capacities were rescaled.
    pub slack_warning: bool,
}

struct BudgetEdges<'a> {
    inst: &'a Instance,
}

impl BudgetEdges<'_> {
    /// Ideal load ratio on each strict edge for multiplier `rho`.
    fn ratios(&self, rho: f64) -> Result<Vec<Option<f64>>> {
        self.inst
            .edges()
            .iter()
            .map(|e| e.is_strict().then(|| e.latency.solve_u(rho * e.price)).transpose())
            .collect()
    }

    fn weights(&self, rho: f64, ratios: &[Option<f64>]) -> Vec<f64> {
        self.inst
            .edges()
            .iter()
            .zip(ratios)
            .map(|(e, u)| match u {
                Some(u) => e.latency.at(*u) + rho * e.price / u,
                None => e.latency.at(0.0),
            })
            .collect()
    }

    /// Shortest-path routing under the Lagrangian weights, plus the dual value
    /// `sum_k d_k dist_k - rho B`.
    fn route(&self, rho: f64, budget: f64) -> Result<(Vec<Vec<EdgeId>>, f64)> {
        let ratios = self.ratios(rho)?;
        let weights = self.weights(rho, &ratios);
        let view = WeightedView::new(self.inst, weights.into_iter().map(Some).collect())?;
        let mut paths = Vec::with_capacity(self.inst.num_commodities());
        let mut dual = -rho * budget;
        for (k, sp) in commodity_paths(&view)?.into_iter().enumerate() {
            match sp.dist {
                Cost::Finite(d) => dual += self.inst.commodities()[k].demand * d,
                Cost::Infinite => return Err(Error::NoFinitePath { commodity: k }),
            }
            paths.push(sp.edges);
        }
        Ok((paths, dual))
    }

    fn spend(&self, loads: &[f64], ratios: &[Option<f64>]) -> f64 {
        self.inst
            .edges()
            .iter()
            .zip(loads)
            .zip(ratios)
            .map(|((e, &v), u)| match u {
                Some(u) if v > 0.0 => e.price * v / u,
                _ => 0.0,
            })
            .sum()
    }

    /// Cheapest capacities for a fixed routing under `sum l z <= budget`.
    /// The optimum spends the whole budget with a common multiplier, found by
    /// bisection in `log rho`.
    fn fixed_routing(&self, loads: &[f64], budget: f64) -> Result<FixedRouting> {
        let uses_strict =
            self.inst.edges().iter().zip(loads).any(|(e, &v)| e.is_strict() && v > 0.0);
        if !uses_strict {
            let caps = CapacityVector::zeros(self.inst.num_edges());
            let cost = routing_cost_of_loads(self.inst, loads, &caps).value();
            return Ok(FixedRouting { caps, cost, spent: 0.0, rho: None, rescaled: false });
        }

        let spend_at = |rho: f64| -> Result<f64> { Ok(self.spend(loads, &self.ratios(rho)?)) };
        // Spending falls from +inf to 0 as rho grows.
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        let mut rescaled = false;
        while spend_at(lo)? < budget && lo > 1e-300 {
            lo *= 1e-4;
        }
        while spend_at(hi)? > budget && hi < 1e300 {
            hi *= 1e4;
        }
        if spend_at(lo)? < budget || spend_at(hi)? > budget {
            rescaled = true;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            let s = spend_at(mid)?;
            if s > budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if (s - budget).abs() <= 1e-14 * budget {
                hi = mid;
                break;
            }
        }
        let rho = hi;
        let ratios = self.ratios(rho)?;
        let mut z: Vec<f64> = loads
            .iter()
            .zip(&ratios)
            .map(|(&v, u)| match u {
                Some(u) if v > 0.0 => v / u,
                _ => 0.0,
            })
            .collect();
        let spent = self.spend(loads, &ratios);
        if spent > 0.0 && spent != budget {
            let scale = budget / spent;
            z.iter_mut().for_each(|x| *x *= scale);
        }
        let caps = CapacityVector::new(z)?;
        let spent = capacity_cost(self.inst, &caps);
        let cost = routing_cost_of_loads(self.inst, loads, &caps).value();
        Ok(FixedRouting { caps, cost, spent, rho: Some(rho), rescaled })
    }
}

struct FixedRouting {
    caps: CapacityVector,
    cost: f64,
    spent: f64,
    rho: Option<f64>,
    rescaled: bool,
}

fn log_grid() -> Vec<f64> {
    let (a, b) = (RHO_MIN.ln(), RHO_MAX.ln());
    (0..RHO_GRID_POINTS)
        .map(|i| (a + (b - a) * i as f64 / (RHO_GRID_POINTS - 1) as f64).exp())
        .collect()
}

/// Minimizes routing cost subject to `sum_e l_e z_e <= B`.
///
/// Every multiplier `rho` induces a shortest-path routing under the weights
/// `S(d) + rho l / d`, where `d^2 S'(d) = rho l`. Routings are collected on a
/// logarithmic `rho` grid and at the switch points between grid neighbours;
/// for each distinct routing the budget-optimal capacities are computed
/// exactly, and the cheapest routing wins.
pub fn solve_budgeted_relaxation(inst: &Instance) -> Result<BudgetedRelaxation> {
    let budget = inst
        .budget()
        .ok_or_else(|| Error::InvalidInstance("instance has no budget".into()))?;
    let edges = BudgetEdges { inst };

    let mut candidates: Vec<Vec<Vec<EdgeId>>> = Vec::new();
    let mut dual_bound = f64::NEG_INFINITY;
    let mut remember = |paths: Vec<Vec<EdgeId>>, dual: f64, candidates: &mut Vec<Vec<Vec<EdgeId>>>| {
        dual_bound = dual_bound.max(dual);
        if !candidates.contains(&paths) {
            candidates.push(paths);
        }
    };

    let grid = log_grid();
    let mut routed = Vec::with_capacity(grid.len());
    for &rho in &grid {
        let (paths, dual) = edges.route(rho, budget)?;
        routed.push(paths.clone());
        remember(paths, dual, &mut candidates);
    }
    for i in 1..grid.len() {
        if routed[i - 1] == routed[i] {
            continue;
        }
        let (mut lo, mut hi) = (grid[i - 1], grid[i]);
        let lo_paths = routed[i - 1].clone();
        for _ in 0..RHO_BISECTION_STEPS {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            let (paths, dual) = edges.route(mid, budget)?;
            if paths == lo_paths {
                lo = mid;
            } else {
                hi = mid;
            }
            remember(paths, dual, &mut candidates);
        }
    }

    let mut best: Option<(FixedRouting, FlowAssignment)> = None;
    for paths in &candidates {
        let flow = FlowAssignment::from_paths(inst, paths);
        let fixed = edges.fixed_routing(&flow.aggregate(), budget)?;
        if best.as_ref().is_none_or(|(b, _)| fixed.cost < b.cost) {
            best = Some((fixed, flow));
        }
    }
    let (fixed, flow) = best.expect("the grid yields at least one routing");
    if fixed.rescaled {
        warn!("budget {budget} could not be matched by the multiplier search; capacities rescaled");
    }
    debug!(
        "budgeted relaxation: {} candidate routings, routing cost {}, dual bound {dual_bound}",
        candidates.len(),
        fixed.cost
    );
    Ok(BudgetedRelaxation {
        flow,
        caps: fixed.caps,
        routing_cost: fixed.cost,
        spent: fixed.spent,
        budget,
        multiplier: fixed.rho,
        dual_bound,
        candidates: candidates.len(),
        slack_warning: fixed.rescaled,
    })
}
