//! Exhaustive capacity grid search for very small instances.
//!
//! Each strict edge gets an axis `{0, h, 2h, .., z_max}` with
//! `h = z_max / resolution`, where `z_max` is twice the largest relaxed
//! capacity. Every grid point is evaluated by solving its equilibrium, so the
//! best cost found is an upper bound on the optimum that tightens as the
//! resolution grows.

use log::debug;

use crate::equilibrium::{solve_wardrop_warm, WardropOptions, WarmStart};
use crate::error::{Error, Result};
use crate::model::{capacity_cost, routing_cost_of_loads, CapacityVector, FlowAssignment, Instance};
use crate::relaxation::solve_relaxation;

pub const MAX_ORACLE_EDGES: usize = 4;
pub const MIN_RESOLUTION: usize = 16;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub flow: FlowAssignment,
    pub caps: CapacityVector,
    pub cost: f64,
    pub z_max: f64,
    /// Grid points whose equilibrium was solved.
    pub evaluated: usize,
}

pub fn oracle(inst: &Instance, resolution: usize) -> Result<OracleResult> {
    oracle_with(inst, resolution, WardropOptions::default())
}

pub fn oracle_with(inst: &Instance, resolution: usize, opts: WardropOptions) -> Result<OracleResult> {
    let axes: Vec<usize> =
        (0..inst.num_edges()).filter(|&i| inst.edges()[i].is_strict()).collect();
    if axes.len() > MAX_ORACLE_EDGES {
        return Err(Error::TooLarge { strict_edges: axes.len(), limit: MAX_ORACLE_EDGES });
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "grid resolution {resolution} is below {MIN_RESOLUTION}"
        )));
    }
    let relax = solve_relaxation(inst)?;
    let largest = relax.caps.as_slice().iter().copied().fold(0.0, f64::max);
    let z_max = if largest > 0.0 { 2.0 * largest } else { 1.0 };
    let step = z_max / resolution as f64;

    let mut index = vec![0usize; axes.len()];
    let mut z = vec![0.0; inst.num_edges()];
    let mut warm: Option<WarmStart> = None;
    let mut best: Option<OracleResult> = None;
    let mut evaluated = 0;
    loop {
        for (&edge, &j) in axes.iter().zip(&index) {
            z[edge] = step * j as f64;
        }
        let caps = CapacityVector::new(z.clone())?;
        match solve_wardrop_warm(inst, &caps, opts, warm.as_ref()) {
            Ok((eq, next)) => {
                evaluated += 1;
                warm = Some(next);
                let routing = routing_cost_of_loads(inst, &eq.flow.aggregate(), &caps).value();
                let cost = routing + capacity_cost(inst, &caps);
                if best.as_ref().is_none_or(|b| cost < b.cost) {
                    best = Some(OracleResult { flow: eq.flow, caps, cost, z_max, evaluated: 0 });
                }
            }
            Err(Error::NoFinitePath { .. }) => {}
            Err(e) => return Err(e),
        }

        // Odometer increment over the grid.
        let mut axis = 0;
        while axis < index.len() {
            index[axis] += 1;
            if index[axis] <= resolution {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
        if axis == index.len() {
            break;
        }
    }
    let mut best = best.ok_or_else(|| {
        Error::InvalidInstance("no grid point routes every commodity".into())
    })?;
    best.evaluated = evaluated;
    debug!("oracle: {evaluated} grid points, best cost {}", best.cost);
    Ok(best)
}
