use thiserror::Error;

use crate::model::FlowAssignment;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative argument {value} passed to {what}")]
    NegativeInput { what: &'static str, value: f64 },

    /// The operation needs `S` and `x^2 S'(x)` strictly increasing and unbounded.
    #[error("latency function is not strictly increasing (constant or zero-slope polynomial)")]
    NotStrictlyIncreasing,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("infinite latency: positive flow on an edge with zero capacity")]
    InfiniteLatency,

    #[error("flow is infeasible: {0}")]
    FlowInfeasible(String),

    #[error("unknown node `{0}`")]
    BadNode(String),

    #[error("commodity {commodity} has no path of finite latency")]
    NoFinitePath { commodity: usize },

    #[error("equilibrium solver hit the iteration cap with relative gap {gap:e}")]
    MaxItersExceeded {
        best: Box<FlowAssignment>,
        gap: f64,
    },

    #[error("instance has the wrong shape: {0}")]
    WrongShape(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid latency function: {0}")]
    InvalidLatency(String),

    #[error("invalid function class: {0}")]
    InvalidClass(String),

    #[error("invalid formula: {0}")]
    InvalidFormula(String),

    #[error("assignment leaves clause {clause} unsatisfied")]
    UnsatisfiedClause { clause: usize },

    #[error("instance too large for the oracle: {strict_edges} strict edges (at most {limit})")]
    TooLarge { strict_edges: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
