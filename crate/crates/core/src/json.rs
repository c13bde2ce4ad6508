//! On-disk JSON schemas for instances and solutions.
//!
//! Instance files:
//! `{"nodes":[...], "edges":[{"id","tail","head","latency":{...},"price"}],
//!   "commodities":[{"source","sink","demand"}], "budget": optional}`.
//! Reals may be given as JSON numbers or decimal strings.
//!
//! Solution files:
//! `{"capacities":{edge:z}, "flows":{commodity:{edge:v}}, "certificate":{...}}`,
//! keyed by edge and commodity ids. Maps are emitted sorted by key.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::latency::LatencyFunction;
use crate::model::{CapacityVector, Certificate, Cost, FlowAssignment, Instance, InstanceBuilder};

/// A real read from either a JSON number or a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;

        impl Visitor<'_> for RealVisitor {
            type Value = Real;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a decimal string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                let parsed: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| E::custom(format!("`{v}` is not a decimal number")))?;
                if parsed.is_finite() {
                    Ok(Real(parsed))
                } else {
                    Err(E::custom(format!("`{v}` is not finite")))
                }
            }
        }

        deserializer.deserialize_any(RealVisitor)
    }
}

/// A node or commodity label written as a string or an integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label(pub String);

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        Ok(match Raw::deserialize(deserializer)? {
            Raw::Str(s) => Label(s),
            Raw::Int(i) => Label(i.to_string()),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub nodes: Vec<Label>,
    pub edges: Vec<EdgeFile>,
    pub commodities: Vec<CommodityFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Real>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub id: Label,
    pub tail: Label,
    pub head: Label,
    pub latency: LatencyFunction,
    pub price: Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommodityFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Label>,
    pub source: Label,
    pub sink: Label,
    pub demand: Real,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        let mut builder = InstanceBuilder::new();
        for node in &self.nodes {
            builder.add_node(&node.0)?;
        }
        for edge in self.edges {
            let tail = builder.node(&edge.tail.0)?;
            let head = builder.node(&edge.head.0)?;
            builder.add_edge(&edge.id.0, tail, head, edge.latency, edge.price.0)?;
        }
        for (k, commodity) in self.commodities.into_iter().enumerate() {
            let id = commodity.id.map_or_else(|| k.to_string(), |l| l.0);
            let source = builder.node(&commodity.source.0)?;
            let sink = builder.node(&commodity.sink.0)?;
            builder.add_commodity(&id, source, sink, commodity.demand.0)?;
        }
        if let Some(budget) = self.budget {
            builder.budget(budget.0)?;
        }
        builder.build()
    }

    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            nodes: inst.node_names().iter().cloned().map(Label).collect(),
            edges: inst
                .edges()
                .iter()
                .map(|e| EdgeFile {
                    id: Label(e.id.clone()),
                    tail: Label(inst.node_name(e.tail).to_owned()),
                    head: Label(inst.node_name(e.head).to_owned()),
                    latency: e.latency.clone(),
                    price: Real(e.price),
                })
                .collect(),
            commodities: inst
                .commodities()
                .iter()
                .map(|c| CommodityFile {
                    id: Some(Label(c.id.clone())),
                    source: Label(inst.node_name(c.source).to_owned()),
                    sink: Label(inst.node_name(c.sink).to_owned()),
                    demand: Real(c.demand),
                })
                .collect(),
            budget: inst.budget().map(Real),
        }
    }
}

/// Parses an instance, attaching the offending source line to JSON syntax errors.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| with_line_context(text, e))?;
    file.into_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst))
        .expect("instance serialization cannot fail")
}

pub(crate) fn with_line_context(text: &str, err: serde_json::Error) -> Error {
    // Errors at end of input point one past the last line.
    let line = err.line().min(text.lines().count());
    match text.lines().nth(line.saturating_sub(1)) {
        Some(src) if line > 0 => {
            let src = src.trim();
            let snippet: String = src.chars().take(120).collect();
            Error::InvalidArgument(format!("malformed JSON: {err}\n  {line} | {snippet}"))
        }
        _ => Error::Json(err),
    }
}

/// A routing and capacity-cost report for an arbitrary `(flow, capacities)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub routing_cost: Cost,
    pub capacity_cost: f64,
    pub total: Cost,
    pub equilibrium_gap: Cost,
    pub marginal_gap: Cost,
    pub violations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolutionFile {
    #[serde(default)]
    pub capacities: BTreeMap<String, f64>,
    #[serde(default)]
    pub flows: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvaluationReport>,
}

impl SolutionFile {
    /// Flows equal to zero are omitted; every capacity is written.
    pub fn new(inst: &Instance, flow: &FlowAssignment, caps: &CapacityVector) -> Self {
        let capacities = inst
            .edges()
            .iter()
            .zip(caps.as_slice())
            .map(|(e, &z)| (e.id.clone(), z))
            .collect();
        let flows = inst
            .commodities()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let per_edge = inst
                    .edges()
                    .iter()
                    .zip(flow.commodity(k))
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(e, &v)| (e.id.clone(), v))
                    .collect();
                (c.id.clone(), per_edge)
            })
            .collect();
        SolutionFile { capacities, flows, certificate: None, report: None }
    }

    pub fn with_certificate(mut self, certificate: Certificate) -> Self {
        self.certificate = Some(certificate);
        self
    }

    pub fn capacities_for(&self, inst: &Instance) -> Result<CapacityVector> {
        let mut values = vec![0.0; inst.num_edges()];
        for (id, &z) in &self.capacities {
            let e = inst
                .edge_by_id(id)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown edge `{id}` in capacities")))?;
            values[e.0] = z;
        }
        CapacityVector::new(values)
    }

    pub fn flows_for(&self, inst: &Instance) -> Result<FlowAssignment> {
        let mut per_commodity = vec![vec![0.0; inst.num_edges()]; inst.num_commodities()];
        for (cid, edges) in &self.flows {
            let k = inst.commodity_by_id(cid).ok_or_else(|| {
                Error::InvalidArgument(format!("unknown commodity `{cid}` in flows"))
            })?;
            for (id, &v) in edges {
                let e = inst
                    .edge_by_id(id)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown edge `{id}` in flows")))?;
                per_commodity[k][e.0] = v;
            }
        }
        Ok(FlowAssignment::new(per_commodity))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| with_line_context(text, e))
    }
}
