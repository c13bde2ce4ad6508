//! Capacity design for selfish-routing networks.
//!
//! An instance is a directed graph whose edges carry a latency function
//! `S_e` and a per-unit capacity price `l_e`. Installing capacity `z_e`
//! makes the edge cost `S_e(v/z_e)` per unit of flow `v`; traffic then
//! settles into a Wardrop equilibrium. The crate computes a relaxation
//! lower bound and rounds it into capacity vectors whose equilibrium
//! cost is within a proven factor of optimal.

pub mod approx;
pub mod equilibrium;
pub mod error;
pub mod gadgets;
pub mod generate;
pub mod json;
pub mod latency;
pub mod model;
pub mod oracle;
pub mod paths;
pub mod relaxation;
mod roots;

pub use error::{Error, Result};
pub use latency::{ClassTag, FunctionClass, LatencyFunction};
pub use model::{
    Algorithm, CapacityVector, Certificate, Commodity, Cost, Edge, EdgeId, FlowAssignment,
    Instance, InstanceBuilder, NodeId,
};
