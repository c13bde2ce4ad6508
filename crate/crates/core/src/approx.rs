//! Approximation algorithms built on the relaxation, each returning a
//! certificate that compares the realized cost with the relaxed lower bound.
//!
//! * BringToEquilibrium keeps the relaxed flow and shrinks every used
//!   capacity until that flow becomes an equilibrium.
//! * ScaleUniformly multiplies all relaxed capacities by one factor and lets
//!   traffic settle.
//! * Best-of-two runs both (or only the one suggested by the routing
//!   fraction) and keeps the cheaper.
//! * The budgeted variant plays the equilibrium of the budget-constrained
//!   relaxed capacities.

use log::{debug, info};

use crate::equilibrium::{solve_wardrop, verify_wardrop, WardropOptions};
use crate::error::{Error, Result};
use crate::latency::{bte_bound_at, su_bound_at, ClassTag, FunctionClass};
use crate::model::{
    capacity_cost, routing_cost_of_loads, Algorithm, CapacityVector, Certificate, FlowAssignment,
    Instance,
};
use crate::relaxation::{
    solve_budgeted_relaxation, solve_relaxation, solve_single_sink, RelaxedSolution, TOL_BUDGET,
};

/// Below this routing fraction ScaleUniformly shrinks capacities although the
/// relaxation spends almost nothing on routing; the certificate says so.
const LOW_ROUTING_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ApproxParams {
    /// Overrides the class inferred from the instance's latency degrees.
    pub class: Option<ClassTag>,
    pub wardrop: WardropOptions,
    /// Best-of-two runs only the algorithm picked by the routing fraction.
    pub dispatch_only: bool,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub flow: FlowAssignment,
    pub caps: CapacityVector,
    pub certificate: Certificate,
}

/// The class certificates are stated for: the override if it admits every
/// latency of the instance, otherwise the tightest polynomial class.
pub fn resolve_class(inst: &Instance, class: Option<ClassTag>) -> Result<FunctionClass> {
    let Some(tag) = class else {
        return Ok(inst.inferred_class());
    };
    let class = FunctionClass::new(tag);
    if class.admits(inst.edges().iter().map(|e| &e.latency)) {
        Ok(class)
    } else {
        Err(Error::InvalidClass(format!(
            "class {tag} does not contain every latency (maximum degree {})",
            inst.max_degree()
        )))
    }
}

struct Bounds {
    guarantee: f64,
    bound_at_p: f64,
}

fn ratio(total: f64, lower: f64) -> f64 {
    if lower > 0.0 {
        total / lower
    } else if total == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

#[allow(clippy::too_many_arguments)]
fn certify(
    inst: &Instance,
    class: &FunctionClass,
    algorithm: Algorithm,
    relax: &RelaxedSolution,
    flow: &FlowAssignment,
    caps: &CapacityVector,
    bounds: Bounds,
    lambda: Option<f64>,
) -> Result<Certificate> {
    let routing = routing_cost_of_loads(inst, &flow.aggregate(), caps)
        .finite()
        .ok_or_else(|| Error::NumericalFailure(format!("{algorithm} produced an infinite routing cost")))?;
    let capacity = capacity_cost(inst, caps);
    let total = routing + capacity;
    let gap = verify_wardrop(inst, caps, flow)?.value();
    let p = relax.routing_fraction();
    let mut notes = Vec::new();
    if p < LOW_ROUTING_FRACTION {
        notes.push(format!("routing fraction {p:.3e} is below {LOW_ROUTING_FRACTION}"));
    }
    Ok(Certificate {
        algorithm,
        selected: None,
        class: class.tag.to_string(),
        mu: class.mu,
        gamma: class.gamma,
        relaxation_cost: relax.cost,
        routing_cost: routing,
        capacity_cost: capacity,
        total,
        ratio: ratio(total, relax.cost),
        guarantee: bounds.guarantee,
        bound_at_p: bounds.bound_at_p,
        p,
        lambda,
        budget: None,
        equilibrium_gap: gap,
        notes,
    })
}

fn bte_from(inst: &Instance, class: &FunctionClass, relax: &RelaxedSolution) -> Result<Solution> {
    let z = inst
        .edges()
        .iter()
        .zip(relax.caps.as_slice())
        .zip(&relax.ratios)
        .map(|((edge, &z_star), u)| match u {
            Some(u) if z_star > 0.0 => Ok(edge.latency.solve_gamma(*u)? * z_star),
            _ => Ok(z_star),
        })
        .collect::<Result<Vec<_>>>()?;
    let caps = CapacityVector::new(z)?;
    let bounds = Bounds {
        guarantee: class.guarantee_single(),
        bound_at_p: bte_bound_at(class.gamma, relax.routing_fraction()),
    };
    let certificate =
        certify(inst, class, Algorithm::Bte, relax, &relax.flow, &caps, bounds, None)?;
    debug!("bring-to-equilibrium total {} ratio {}", certificate.total, certificate.ratio);
    Ok(Solution { flow: relax.flow.clone(), caps, certificate })
}

/// `mu + sqrt(mu p / (1 - p))`.
pub fn scale_factor(mu: f64, p: f64) -> f64 {
    mu + (mu * p / (1.0 - p)).sqrt()
}

fn su_from(
    inst: &Instance,
    class: &FunctionClass,
    relax: &RelaxedSolution,
    opts: WardropOptions,
) -> Result<Solution> {
    let p = relax.routing_fraction();
    let bounds = Bounds {
        guarantee: class.guarantee_single(),
        bound_at_p: su_bound_at(class.mu, p),
    };
    if 1.0 - p <= 1e-12 {
        // No capacity is bought at all; the relaxed solution is already an equilibrium.
        let mut certificate = certify(
            inst,
            class,
            Algorithm::Su,
            relax,
            &relax.flow,
            &relax.caps,
            bounds,
            Some(1.0),
        )?;
        certificate.notes.push("relaxation buys no capacity; returned unchanged".into());
        return Ok(Solution { flow: relax.flow.clone(), caps: relax.caps.clone(), certificate });
    }
    let lambda = scale_factor(class.mu, p);
    let caps = relax.caps.scaled(lambda);
    let eq = solve_wardrop(inst, &caps, opts)?;
    let certificate = certify(inst, class, Algorithm::Su, relax, &eq.flow, &caps, bounds, Some(lambda))?;
    debug!(
        "scale-uniformly lambda {lambda} total {} ratio {} after {} iterations",
        certificate.total, certificate.ratio, eq.iterations
    );
    Ok(Solution { flow: eq.flow, caps, certificate })
}

pub fn bring_to_equilibrium(inst: &Instance, params: &ApproxParams) -> Result<Solution> {
    let class = resolve_class(inst, params.class)?;
    bte_from(inst, &class, &solve_relaxation(inst)?)
}

pub fn scale_uniformly(inst: &Instance, params: &ApproxParams) -> Result<Solution> {
    let class = resolve_class(inst, params.class)?;
    su_from(inst, &class, &solve_relaxation(inst)?, params.wardrop)
}

/// The cheaper of the two algorithms. With `dispatch_only`, ScaleUniformly
/// runs when the routing fraction is at most the crossover point and
/// BringToEquilibrium otherwise.
pub fn best_of_two(inst: &Instance, params: &ApproxParams) -> Result<Solution> {
    let class = resolve_class(inst, params.class)?;
    let relax = solve_relaxation(inst)?;
    let p = relax.routing_fraction();
    let p_star = class.p_star();
    let prefer_su = p <= p_star;

    let mut chosen = if params.dispatch_only {
        if prefer_su {
            su_from(inst, &class, &relax, params.wardrop)?
        } else {
            bte_from(inst, &class, &relax)?
        }
    } else {
        let bte = bte_from(inst, &class, &relax)?;
        let su = su_from(inst, &class, &relax, params.wardrop)?;
        info!("best-of-two: bte total {}, su total {}", bte.certificate.total, su.certificate.total);
        if su.certificate.total < bte.certificate.total
            || (su.certificate.total == bte.certificate.total && prefer_su)
        {
            su
        } else {
            bte
        }
    };

    let cert = &mut chosen.certificate;
    let bte_bound = bte_bound_at(class.gamma, p);
    let su_bound = su_bound_at(class.mu, p);
    cert.selected = Some(cert.algorithm);
    cert.algorithm = Algorithm::Best2;
    cert.guarantee = class.guarantee_best2();
    cert.bound_at_p = if params.dispatch_only {
        if prefer_su { su_bound } else { bte_bound }
    } else {
        bte_bound.min(su_bound)
    };
    cert.notes.push(format!(
        "p = {p:.6}, crossover {p_star:.6}; dispatch rule picks {}",
        if prefer_su { Algorithm::Su } else { Algorithm::Bte }
    ));
    Ok(chosen)
}

/// Equilibrium of the budget-constrained relaxed capacities. The ratio
/// compares routing costs only, since capacity is a constraint here.
pub fn solve_budgeted(inst: &Instance, params: &ApproxParams) -> Result<Solution> {
    let class = resolve_class(inst, params.class)?;
    let guarantee = class.guarantee_budget().ok_or_else(|| {
        Error::InvalidClass(format!("class {} has no finite budgeted guarantee", class.tag))
    })?;
    let relax = solve_budgeted_relaxation(inst)?;
    let eq = solve_wardrop(inst, &relax.caps, params.wardrop)?;
    let routing = routing_cost_of_loads(inst, &eq.flow.aggregate(), &relax.caps)
        .finite()
        .ok_or_else(|| Error::NumericalFailure("budgeted equilibrium has infinite cost".into()))?;
    let capacity = capacity_cost(inst, &relax.caps);
    let gap = verify_wardrop(inst, &relax.caps, &eq.flow)?.value();

    let mut notes = vec![
        format!("{} candidate routings examined", relax.candidates),
        format!("Lagrangian lower bound on relaxed routing cost: {}", relax.dual_bound),
    ];
    if relax.slack_warning {
        notes.push("budget slack warning: multiplier search did not meet the budget".into());
    }
    if relax.spent > relax.budget * (1.0 + TOL_BUDGET) {
        notes.push(format!("spent {} exceeds budget {}", relax.spent, relax.budget));
    }
    let total = routing + capacity;
    let certificate = Certificate {
        algorithm: Algorithm::Budgeted,
        selected: None,
        class: class.tag.to_string(),
        mu: class.mu,
        gamma: class.gamma,
        relaxation_cost: relax.routing_cost,
        routing_cost: routing,
        capacity_cost: capacity,
        total,
        ratio: ratio(routing, relax.routing_cost),
        guarantee,
        bound_at_p: guarantee,
        p: if total > 0.0 { routing / total } else { 1.0 },
        lambda: None,
        budget: Some(relax.budget),
        equilibrium_gap: gap,
        notes,
    };
    Ok(Solution { flow: eq.flow, caps: relax.caps, certificate })
}

/// Relaxed or single-sink solutions wrapped in a certificate with ratio 1.
fn relaxed_solution(inst: &Instance, params: &ApproxParams, algorithm: Algorithm) -> Result<Solution> {
    let class = resolve_class(inst, params.class)?;
    let relax = match algorithm {
        Algorithm::SingleSink => solve_single_sink(inst)?,
        _ => solve_relaxation(inst)?,
    };
    let bounds = Bounds { guarantee: 1.0, bound_at_p: 1.0 };
    let mut certificate =
        certify(inst, &class, algorithm, &relax, &relax.flow, &relax.caps, bounds, None)?;
    if algorithm == Algorithm::Relax {
        certificate.notes.push("relaxed solution: the flow need not be an equilibrium".into());
    }
    Ok(Solution { flow: relax.flow.clone(), caps: relax.caps.clone(), certificate })
}

pub fn solve(inst: &Instance, algorithm: Algorithm, params: &ApproxParams) -> Result<Solution> {
    match algorithm {
        Algorithm::Relax | Algorithm::SingleSink => relaxed_solution(inst, params, algorithm),
        Algorithm::Bte => bring_to_equilibrium(inst, params),
        Algorithm::Su => scale_uniformly(inst, params),
        Algorithm::Best2 => best_of_two(inst, params),
        Algorithm::Budgeted => solve_budgeted(inst, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::LatencyFunction;
    use crate::model::InstanceBuilder;

    fn single_edge() -> Instance {
        let mut b = InstanceBuilder::new();
        let s = b.add_node("s").unwrap();
        let t = b.add_node("t").unwrap();
        b.add_edge("e", s, t, LatencyFunction::monomial(1.0, 1).unwrap(), 1.0).unwrap();
        b.add_commodity("k", s, t, 1.0).unwrap();
        b.build().unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn bte_on_single_edge() {
        let sol = bring_to_equilibrium(&single_edge(), &ApproxParams::default()).unwrap();
        let c = &sol.certificate;
        assert!(close(sol.caps.as_slice()[0], 0.5));
        assert!(close(c.routing_cost, 2.0) && close(c.capacity_cost, 0.5));
        assert!(close(c.total, 2.5) && close(c.ratio, 1.25));
        assert!(c.within_guarantee(1e-9) && c.cost_split_consistent());
        assert!(c.equilibrium_gap < 1e-12);
    }

    #[test]
    fn su_on_single_edge() {
        let sol = scale_uniformly(&single_edge(), &ApproxParams::default()).unwrap();
        let c = &sol.certificate;
        assert!(close(c.p, 0.5));
        assert!(close(c.lambda.unwrap(), 0.75));
        assert!(close(c.routing_cost, 4.0 / 3.0) && close(c.capacity_cost, 0.75));
        assert!(close(c.total, 25.0 / 12.0) && close(c.ratio, 25.0 / 24.0));
        assert!(close(c.bound_at_p, 1.125));
    }

    #[test]
    fn best2_dispatches_to_su() {
        for dispatch_only in [false, true] {
            let params = ApproxParams { dispatch_only, ..Default::default() };
            let c = best_of_two(&single_edge(), &params).unwrap().certificate;
            assert_eq!(c.algorithm, Algorithm::Best2);
            assert_eq!(c.selected, Some(Algorithm::Su));
            assert!(close(c.total, 25.0 / 12.0));
            assert!(close(c.guarantee, 49.0 / 41.0));
        }
    }

    #[test]
    fn class_override_must_admit_the_instance() {
        let mut b = InstanceBuilder::new();
        let s = b.add_node("s").unwrap();
        let t = b.add_node("t").unwrap();
        b.add_edge("e", s, t, LatencyFunction::monomial(1.0, 2).unwrap(), 1.0).unwrap();
        b.add_commodity("k", s, t, 1.0).unwrap();
        let inst = b.build().unwrap();
        let params = ApproxParams { class: Some(ClassTag::Concave), ..Default::default() };
        assert!(matches!(best_of_two(&inst, &params), Err(Error::InvalidClass(_))));
        let params = ApproxParams { class: Some(ClassTag::ConvexGeneral), ..Default::default() };
        let c = best_of_two(&inst, &params).unwrap().certificate;
        assert!(close(c.guarantee, 1.8));
    }

    #[test]
    fn constant_only_instance_is_degenerate() {
        let mut b = InstanceBuilder::new();
        let s = b.add_node("s").unwrap();
        let t = b.add_node("t").unwrap();
        b.add_edge("e", s, t, LatencyFunction::constant(0.0).unwrap(), 0.0).unwrap();
        b.add_commodity("k", s, t, 1.0).unwrap();
        let inst = b.build().unwrap();
        for algorithm in [Algorithm::Bte, Algorithm::Su, Algorithm::Best2] {
            let c = solve(&inst, algorithm, &ApproxParams::default()).unwrap().certificate;
            assert_eq!(c.total, 0.0);
            assert_eq!(c.ratio, 1.0);
        }
    }

    #[test]
    fn budgeted_single_edge() {
        let inst = single_edge().with_budget(1.0).unwrap();
        let c = solve_budgeted(&inst, &ApproxParams::default()).unwrap().certificate;
        assert!(close(c.ratio, 1.0));
        assert!(close(c.routing_cost, 1.0));
        assert!(close(c.guarantee, 4.0 / 3.0));
        assert_eq!(c.budget, Some(1.0));
    }
}
