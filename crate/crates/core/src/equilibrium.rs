//! Wardrop equilibria for fixed capacities, and their verification.
//!
//! The solver minimizes the Beckmann potential `sum_e int_0^{v_e} S_e(t/z_e) dt`
//! with a Frank–Wolfe scheme. Each commodity keeps the set of paths its
//! flow currently uses; every iteration adds the all-or-nothing shortest
//! path to that set and then runs pairwise steps that shift flow from the
//! costliest used path to the cheapest one, each with an exact line search.
//! The duality gap checked for termination is the numerator of
//! [`verify_wardrop`].

use log::{debug, trace};

use crate::error::{Error, Result};
use crate::json::EvaluationReport;
use crate::model::{
    edge_latency, routing_cost_of_loads, validate_flow, CapacityVector, Cost, Edge, EdgeId,
    FlowAssignment, Instance,
};
use crate::paths::{commodity_paths, shortest_path_tree, WeightedView};

pub const DEFAULT_TOL_GAP: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WardropOptions {
    /// Relative gap at which the solve stops.
    pub tol_gap: f64,
    pub max_iters: usize,
}

impl Default for WardropOptions {
    fn default() -> Self {
        WardropOptions { tol_gap: DEFAULT_TOL_GAP, max_iters: DEFAULT_MAX_ITERS }
    }
}

#[derive(Debug, Clone)]
pub struct WardropSolution {
    pub flow: FlowAssignment,
    /// Relative equilibrium gap of `flow`, as reported by [`verify_wardrop`].
    pub gap: f64,
    pub iterations: usize,
    /// Beckmann potential after every iteration, starting with the initial point.
    pub potential_trace: Vec<f64>,
}

/// Path sets carried between solves so that nearby capacity vectors can
/// reuse each other's equilibria.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    paths: Vec<Vec<(Vec<EdgeId>, f64)>>,
}

fn usable(edge: &Edge, z: f64) -> bool {
    !edge.is_strict() || z > 0.0
}

/// Latency and its derivative in the load, for a usable edge.
#[inline]
fn latency_and_slope(edge: &Edge, v: f64, z: f64) -> (f64, f64) {
    if edge.is_strict() {
        let x = v.max(0.0) / z;
        (edge.latency.at(x), edge.latency.slope_at(x) / z)
    } else {
        (edge.latency.at(0.0), 0.0)
    }
}

pub fn beckmann_potential(inst: &Instance, caps: &CapacityVector, loads: &[f64]) -> Cost {
    let mut total = 0.0;
    for (i, (edge, &v)) in inst.edges().iter().zip(loads).enumerate() {
        if v <= 0.0 {
            continue;
        }
        let z = caps.get(EdgeId(i));
        if !usable(edge, z) {
            return Cost::Infinite;
        }
        total += edge.latency.beckmann_at(v, z);
    }
    Cost::Finite(total)
}

struct Solver<'a> {
    inst: &'a Instance,
    caps: &'a CapacityVector,
    usable: Vec<bool>,
    loads: Vec<f64>,
    paths: Vec<Vec<(Vec<EdgeId>, f64)>>,
}

impl<'a> Solver<'a> {
    fn new(inst: &'a Instance, caps: &'a CapacityVector) -> Result<Self> {
        if caps.len() != inst.num_edges() {
            return Err(Error::InvalidArgument(format!(
                "{} capacities for {} edges",
                caps.len(),
                inst.num_edges()
            )));
        }
        let usable = inst
            .edges()
            .iter()
            .zip(caps.as_slice())
            .map(|(e, &z)| usable(e, z))
            .collect();
        Ok(Solver {
            inst,
            caps,
            usable,
            loads: vec![0.0; inst.num_edges()],
            paths: vec![Vec::new(); inst.num_commodities()],
        })
    }

    fn latency(&self, e: EdgeId, v: f64) -> (f64, f64) {
        latency_and_slope(self.inst.edge(e), v, self.caps.get(e))
    }

    fn view(&self) -> WeightedView<'a> {
        let weights = self
            .inst
            .edges()
            .iter()
            .enumerate()
            .map(|(i, edge)| self.usable[i].then(|| self.latency_at_load(edge, i)))
            .collect();
        WeightedView::new(self.inst, weights).expect("latencies are non-negative")
    }

    fn latency_at_load(&self, edge: &Edge, i: usize) -> f64 {
        latency_and_slope(edge, self.loads[i], self.caps.as_slice()[i]).0
    }

    fn rebuild_loads(&mut self) {
        self.loads.iter_mut().for_each(|v| *v = 0.0);
        for set in &self.paths {
            for (path, mass) in set {
                for e in path {
                    self.loads[e.0] += mass;
                }
            }
        }
    }

    fn all_or_nothing(&mut self) -> Result<()> {
        let view = self.view();
        let sps = commodity_paths(&view)?;
        for (k, sp) in sps.into_iter().enumerate() {
            if !sp.dist.is_finite() {
                return Err(Error::NoFinitePath { commodity: k });
            }
            self.paths[k] = vec![(sp.edges, self.inst.commodities()[k].demand)];
        }
        self.rebuild_loads();
        Ok(())
    }

    fn adopt(&mut self, warm: &WarmStart) -> bool {
        if warm.paths.len() != self.paths.len() {
            return false;
        }
        let ok = warm
            .paths
            .iter()
            .flatten()
            .all(|(path, _)| path.iter().all(|e| self.usable[e.0]));
        if ok {
            self.paths = warm.paths.clone();
            self.rebuild_loads();
        }
        ok
    }

    /// `(total travel time, relative gap)` at the current loads.
    fn gap(&self) -> Result<(f64, f64)> {
        let view = self.view();
        let sps = commodity_paths(&view)?;
        let mut tt = 0.0;
        for (i, &v) in self.loads.iter().enumerate() {
            if v > 0.0 {
                tt += view.weight(EdgeId(i)).expect("loaded edges are usable") * v;
            }
        }
        let mut lower = 0.0;
        for (k, sp) in sps.iter().enumerate() {
            match sp.dist {
                Cost::Finite(d) => lower += self.inst.commodities()[k].demand * d,
                Cost::Infinite => return Err(Error::NoFinitePath { commodity: k }),
            }
        }
        Ok((tt, ((tt - lower) / tt.max(1.0)).max(0.0)))
    }

    fn potential(&self) -> f64 {
        beckmann_potential(self.inst, self.caps, &self.loads).value()
    }

    fn path_cost(&self, path: &[EdgeId]) -> f64 {
        path.iter().map(|&e| self.latency(e, self.loads[e.0]).0).sum()
    }

    /// One round of pairwise steps for commodity `k`.
    fn equilibrate(&mut self, k: usize) -> Result<()> {
        let sink = self.inst.commodities()[k].sink;
        let source = self.inst.commodities()[k].source;
        let tree = shortest_path_tree(&self.view(), sink)?;
        let best = tree
            .path_from(self.inst, source)
            .ok_or(Error::NoFinitePath { commodity: k })?;
        if !self.paths[k].iter().any(|(p, _)| *p == best) {
            self.paths[k].push((best, 0.0));
        }

        let rounds = 2 * self.paths[k].len() + 2;
        for _ in 0..rounds {
            let costs: Vec<f64> = self.paths[k].iter().map(|(p, _)| self.path_cost(p)).collect();
            let (mut hi, mut lo) = (None::<usize>, 0usize);
            for (i, &c) in costs.iter().enumerate() {
                if self.paths[k][i].1 > 0.0 && hi.is_none_or(|h| c > costs[h]) {
                    hi = Some(i);
                }
                if c < costs[lo] {
                    lo = i;
                }
            }
            let Some(hi) = hi else { break };
            if hi == lo || costs[hi] - costs[lo] <= 1e-15 * costs[hi].max(1.0) {
                break;
            }
            self.pairwise_step(k, hi, lo);
        }
        self.paths[k].retain(|(_, m)| *m > 0.0);
        Ok(())
    }

    /// Moves flow of commodity `k` from path `from` to path `to` with exact line search.
    fn pairwise_step(&mut self, k: usize, from: usize, to: usize) {
        let from_path = &self.paths[k][from].0;
        let to_path = &self.paths[k][to].0;
        let plus: Vec<EdgeId> = to_path.iter().filter(|e| !from_path.contains(e)).copied().collect();
        let minus: Vec<EdgeId> =
            from_path.iter().filter(|e| !to_path.contains(e)).copied().collect();
        let mass = self.paths[k][from].1;

        let slope = |t: f64| -> (f64, f64) {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for &e in &plus {
                let (l, s) = self.latency(e, self.loads[e.0] + t);
                d1 += l;
                d2 += s;
            }
            for &e in &minus {
                let (l, s) = self.latency(e, self.loads[e.0] - t);
                d1 -= l;
                d2 += s;
            }
            (d1, d2)
        };

        let (d_start, _) = slope(0.0);
        if d_start >= 0.0 {
            return;
        }
        let step = if slope(mass).0 <= 0.0 { mass } else { line_search(slope, mass) };
        if step <= 0.0 {
            return;
        }
        for &e in &plus {
            self.loads[e.0] += step;
        }
        for &e in &minus {
            self.loads[e.0] = (self.loads[e.0] - step).max(0.0);
        }
        if step >= mass {
            self.paths[k][from].1 = 0.0;
        } else {
            self.paths[k][from].1 -= step;
        }
        self.paths[k][to].1 += step;
    }

    fn flow(&self) -> FlowAssignment {
        let mut flow = FlowAssignment::zeros(self.inst);
        for (k, set) in self.paths.iter().enumerate() {
            let v = flow.commodity_mut(k);
            for (path, mass) in set {
                for e in path {
                    v[e.0] += mass;
                }
            }
        }
        flow
    }
}

/// Root of the increasing directional derivative on `(0, hi)`.
fn line_search(slope: impl Fn(f64) -> (f64, f64), hi: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    let mut t = 0.5 * hi;
    for _ in 0..200 {
        let (d1, d2) = slope(t);
        if d1 == 0.0 {
            return t;
        }
        if d1 < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let newton = t - d1 / d2;
        t = if d2 > 0.0 && newton > lo && newton < hi {
            if (newton - t).abs() <= 2.0 * f64::EPSILON * t {
                return newton;
            }
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    // lo keeps the derivative non-positive, so the step never overshoots.
    lo
}

pub fn solve_wardrop(
    inst: &Instance,
    caps: &CapacityVector,
    opts: WardropOptions,
) -> Result<WardropSolution> {
    solve_wardrop_warm(inst, caps, opts, None).map(|(s, _)| s)
}

/// [`solve_wardrop`] that can start from, and hands back, the per-commodity path sets.
pub fn solve_wardrop_warm(
    inst: &Instance,
    caps: &CapacityVector,
    opts: WardropOptions,
    warm: Option<&WarmStart>,
) -> Result<(WardropSolution, WarmStart)> {
    if opts.tol_gap.is_nan() || opts.tol_gap <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol_gap must be positive, got {}", opts.tol_gap)));
    }
    let mut solver = Solver::new(inst, caps)?;
    if !warm.is_some_and(|w| solver.adopt(w)) {
        solver.all_or_nothing()?;
    }

    let mut trace = vec![solver.potential()];
    let mut best: Option<(f64, FlowAssignment)> = None;
    for it in 0..=opts.max_iters {
        solver.rebuild_loads();
        let (_, gap) = solver.gap()?;
        trace!("wardrop iteration {it}: gap {gap:e}");
        if gap <= opts.tol_gap {
            debug!("wardrop converged after {it} iterations, gap {gap:e}");
            let solution = WardropSolution {
                flow: solver.flow(),
                gap,
                iterations: it,
                potential_trace: trace,
            };
            return Ok((solution, WarmStart { paths: solver.paths }));
        }
        if best.as_ref().is_none_or(|(g, _)| gap < *g) {
            best = Some((gap, solver.flow()));
        }
        if it == opts.max_iters {
            break;
        }
        for k in 0..inst.num_commodities() {
            solver.equilibrate(k)?;
        }
        let potential = solver.potential();
        let previous = *trace.last().unwrap();
        debug_assert!(
            potential <= previous + 1e-12 * previous.abs().max(1.0),
            "Beckmann potential increased from {previous} to {potential}"
        );
        trace.push(potential);
    }
    let (gap, flow) = best.expect("at least one iterate");
    Err(Error::MaxItersExceeded { best: Box::new(flow), gap })
}

/// Shared body of the two gap checks: `latency(edge, load, capacity)` gives
/// the per-edge cost, `None` when the edge is unusable.
fn relative_gap(
    inst: &Instance,
    caps: &CapacityVector,
    flow: &FlowAssignment,
    latency: impl Fn(&Edge, f64, f64) -> Option<f64>,
) -> Result<Cost> {
    if let Some(v) = validate_flow(inst, flow).first() {
        return Err(Error::FlowInfeasible(v.describe(inst)));
    }
    let loads = flow.aggregate();
    let mut weights = Vec::with_capacity(inst.num_edges());
    let mut tt = 0.0;
    for (i, (edge, &v)) in inst.edges().iter().zip(&loads).enumerate() {
        let w = latency(edge, v.max(0.0), caps.get(EdgeId(i)));
        if v > 0.0 {
            match w {
                Some(w) => tt += w * v,
                None => return Ok(Cost::Infinite),
            }
        }
        weights.push(w);
    }
    let view = WeightedView::new(inst, weights)?;
    let mut lower = 0.0;
    for (k, sp) in commodity_paths(&view)?.iter().enumerate() {
        match sp.dist {
            Cost::Finite(d) => lower += inst.commodities()[k].demand * d,
            Cost::Infinite => return Err(Error::NoFinitePath { commodity: k }),
        }
    }
    Ok(Cost::Finite(((tt - lower) / tt.max(1.0)).max(0.0)))
}

/// Relative violation of the variational inequality:
/// `(sum_e S_e(v_e/z_e) v_e - sum_k d_k dist_k) / max(1, sum_e S_e(v_e/z_e) v_e)`.
pub fn verify_wardrop(inst: &Instance, caps: &CapacityVector, flow: &FlowAssignment) -> Result<Cost> {
    relative_gap(inst, caps, flow, edge_latency)
}

/// [`verify_wardrop`] with every latency replaced by its marginal cost
/// `S(x) + x S'(x)`; zero exactly when the flow is system-optimal for `caps`.
pub fn marginal_equilibrium_check(
    inst: &Instance,
    caps: &CapacityVector,
    flow: &FlowAssignment,
) -> Result<Cost> {
    relative_gap(inst, caps, flow, |edge, v, z| {
        if !edge.is_strict() {
            Some(edge.latency.at(0.0))
        } else if z > 0.0 {
            Some(edge.latency.marginal_at(v / z))
        } else {
            None
        }
    })
}

/// Cost split, gaps, and conservation violations of an arbitrary solution.
pub fn evaluate(inst: &Instance, caps: &CapacityVector, flow: &FlowAssignment) -> EvaluationReport {
    let violations: Vec<String> =
        validate_flow(inst, flow).iter().map(|v| v.describe(inst)).collect();
    let capacity_cost = crate::model::capacity_cost(inst, caps);
    if !violations.is_empty() {
        return EvaluationReport {
            routing_cost: Cost::Infinite,
            capacity_cost,
            total: Cost::Infinite,
            equilibrium_gap: Cost::Infinite,
            marginal_gap: Cost::Infinite,
            violations,
            iterations: None,
        };
    }
    let routing_cost = routing_cost_of_loads(inst, &flow.aggregate(), caps);
    let equilibrium_gap = verify_wardrop(inst, caps, flow).unwrap_or(Cost::Infinite);
    let marginal_gap = marginal_equilibrium_check(inst, caps, flow).unwrap_or(Cost::Infinite);
    EvaluationReport {
        routing_cost,
        capacity_cost,
        total: routing_cost + capacity_cost,
        equilibrium_gap,
        marginal_gap,
        violations,
        iterations: None,
    }
}
