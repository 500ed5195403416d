//! Labeled parameter-level edges and their API-level projection.

mod build;
mod io;
mod perturb;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::docmodel::{Direction, ParamRef, PrimitiveType};

pub use build::{build_graph, Label, LabelRow};
pub use io::{deserialize, labels_to_value, read_labels, serialize, write_labels, GRAPH_FORMAT_VERSION};
pub use perturb::perturb_graph;
pub use stats::{compute_stats, compute_stats_with, Denominator, EdgeCounts, GraphStats};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate label for {from} -> {target}: {first} vs {second}")]
    Duplicate {
        from: ParamRef,
        target: ParamRef,
        first: String,
        second: String,
    },
    #[error("edge endpoint {0} does not resolve")]
    Dangling(ParamRef),
    #[error("edge endpoint {0} has the wrong direction")]
    WrongDirection(ParamRef),
    #[error("unknown api {0}")]
    UnknownApi(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported graph format version {0}")]
    Version(u32),
    #[error("invalid label row {row}: {reason}")]
    InvalidLabel { row: usize, reason: String },
}

impl GraphError {
    pub(crate) fn from_json(e: serde_json::Error) -> Self {
        GraphError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Whether a source output can serve as a target input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Compatibility {
    Compatible,
    Conditional,
    Incompatible,
}

impl Compatibility {
    pub const ALL: [Compatibility; 3] = [
        Compatibility::Compatible,
        Compatibility::Conditional,
        Compatibility::Incompatible,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Compatibility::Compatible => "compatible",
            Compatibility::Conditional => "conditional",
            Compatibility::Incompatible => "incompatible",
        }
    }
}

impl FromStr for Compatibility {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Compatibility::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown compatibility {s:?}"))
    }
}

/// Whether passing the output into the input reflects realistic usage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Naturalness {
    Natural,
    Unnatural,
}

impl Naturalness {
    pub const ALL: [Naturalness; 2] = [Naturalness::Natural, Naturalness::Unnatural];

    pub fn as_str(self) -> &'static str {
        match self {
            Naturalness::Natural => "natural",
            Naturalness::Unnatural => "unnatural",
        }
    }
}

impl FromStr for Naturalness {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Naturalness::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown naturalness {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeType {
    Strong,
    Weak,
    Non,
}

impl EdgeType {
    pub const ALL: [EdgeType; 3] = [EdgeType::Strong, EdgeType::Weak, EdgeType::Non];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Strong => "strong",
            EdgeType::Weak => "weak",
            EdgeType::Non => "non",
        }
    }

    /// Row/column position in confusion matrices.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Accepts `strong`, `strong-edge`, `strong_edge`, `Strong Edge` and the
    /// same forms for `weak` and `non`.
    pub fn parse_label(label: &str) -> Option<EdgeType> {
        let l = label.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        let l = l.strip_suffix("-edge").unwrap_or(&l);
        match l {
            "strong" => Some(EdgeType::Strong),
            "weak" => Some(EdgeType::Weak),
            "non" | "none" | "no" => Some(EdgeType::Non),
            _ => None,
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EdgeType::parse_label(s).ok_or_else(|| format!("unknown edge type {s:?}"))
    }
}

/// Edge type from the two annotation criteria.
pub fn derive_edge_type(c: Compatibility, n: Naturalness) -> EdgeType {
    match (c, n) {
        (Compatibility::Compatible, Naturalness::Natural) => EdgeType::Strong,
        (Compatibility::Conditional, Naturalness::Natural) => EdgeType::Weak,
        _ => EdgeType::Non,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Human,
    Model,
    Oracle,
}

/// Set of edge types that count as connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeMask {
    bits: u8,
}

impl EdgeMask {
    pub const STRONG_WEAK: EdgeMask = EdgeMask { bits: 0b011 };
    pub const STRONG: EdgeMask = EdgeMask { bits: 0b001 };
    pub const WEAK: EdgeMask = EdgeMask { bits: 0b010 };
    pub const EMPTY: EdgeMask = EdgeMask { bits: 0 };

    pub fn of(types: &[EdgeType]) -> Self {
        EdgeMask {
            bits: types.iter().fold(0, |b, t| b | (1 << t.index())),
        }
    }

    pub fn contains(self, t: EdgeType) -> bool {
        self.bits & (1 << t.index()) != 0
    }

    pub fn types(self) -> Vec<EdgeType> {
        EdgeType::ALL.into_iter().filter(|t| self.contains(*t)).collect()
    }

    /// Whether every type in `self` is also in `other`.
    pub fn is_subset(self, other: EdgeMask) -> bool {
        self.bits & !other.bits == 0
    }
}

impl Default for EdgeMask {
    fn default() -> Self {
        EdgeMask::STRONG_WEAK
    }
}

impl fmt::Display for EdgeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.types().into_iter().map(EdgeType::as_str).collect();
        f.write_str(&names.join(","))
    }
}

/// Parses a comma-separated list such as `strong,weak` or `strong`.
impl FromStr for EdgeMask {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut types = Vec::new();
        for part in s.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            types.push(part.parse::<EdgeType>()?);
        }
        if types.is_empty() {
            return Err("empty edge mask".into());
        }
        Ok(EdgeMask::of(&types))
    }
}

impl Serialize for EdgeMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.types())
    }
}

impl<'de> Deserialize<'de> for EdgeMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let types = Vec::<EdgeType>::deserialize(d)?;
        Ok(EdgeMask::of(&types))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: ParamRef,
    pub target: ParamRef,
    pub etype: EdgeType,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    #[serde(rename = "type")]
    pub ptype: PrimitiveType,
}

/// The part of an API's documentation a graph needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSummary {
    pub domain: String,
    pub inputs: Vec<ParamSummary>,
    pub outputs: Vec<ParamSummary>,
}

impl ApiSummary {
    pub fn params(&self, direction: Direction) -> &[ParamSummary] {
        match direction {
            Direction::Input => &self.inputs,
            Direction::Output => &self.outputs,
        }
    }

    pub fn has_param(&self, direction: Direction, name: &str) -> bool {
        self.params(direction).iter().any(|p| p.name == name)
    }
}

/// Directed API-level adjacency: source api_id → target api_ids.
pub type ApiAdjacency = BTreeMap<String, BTreeSet<String>>;

/// Immutable parameter-level graph. Absent pairs are non edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiGraph {
    apis: BTreeMap<String, ApiSummary>,
    edges: BTreeMap<(ParamRef, ParamRef), EdgeRecord>,
    incoming: BTreeMap<ParamRef, Vec<(ParamRef, EdgeType)>>,
}

impl ApiGraph {
    /// Validates endpoints and builds the graph. Edges must be unique per
    /// (source, target).
    pub fn from_parts(
        apis: BTreeMap<String, ApiSummary>,
        edges: impl IntoIterator<Item = EdgeRecord>,
    ) -> Result<Self, GraphError> {
        let mut map: BTreeMap<(ParamRef, ParamRef), EdgeRecord> = BTreeMap::new();
        for e in edges {
            for (r, dir) in [(&e.source, Direction::Output), (&e.target, Direction::Input)] {
                if r.direction != dir {
                    return Err(GraphError::WrongDirection(r.clone()));
                }
                let ok = apis.get(&r.api_id).is_some_and(|a| a.has_param(dir, &r.param_name));
                if !ok {
                    return Err(GraphError::Dangling(r.clone()));
                }
            }
            let key = (e.source.clone(), e.target.clone());
            if let Some(prev) = map.get(&key) {
                return Err(GraphError::Duplicate {
                    from: e.source.clone(),
                    target: e.target.clone(),
                    first: format!("{} ({:?})", prev.etype, prev.provenance),
                    second: format!("{} ({:?})", e.etype, e.provenance),
                });
            }
            map.insert(key, e);
        }
        let mut incoming: BTreeMap<ParamRef, Vec<(ParamRef, EdgeType)>> = BTreeMap::new();
        for e in map.values() {
            incoming
                .entry(e.target.clone())
                .or_default()
                .push((e.source.clone(), e.etype));
        }
        Ok(ApiGraph {
            apis,
            edges: map,
            incoming,
        })
    }

    pub fn apis(&self) -> &BTreeMap<String, ApiSummary> {
        &self.apis
    }

    pub fn api(&self, api_id: &str) -> Option<&ApiSummary> {
        self.apis.get(api_id)
    }

    pub fn domain_of(&self, api_id: &str) -> Option<&str> {
        self.apis.get(api_id).map(|a| a.domain.as_str())
    }

    /// Stored edges in (source, target) order, including explicit non edges.
    pub fn edges(&self) -> impl Iterator<Item = &EdgeRecord> {
        self.edges.values()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges whose type is in `mask`.
    pub fn masked_edges(&self, mask: EdgeMask) -> impl Iterator<Item = &EdgeRecord> {
        self.edges.values().filter(move |e| mask.contains(e.etype))
    }

    /// Type of the edge between two parameters; non when absent.
    pub fn edge_type(&self, source: &ParamRef, target: &ParamRef) -> EdgeType {
        self.edges
            .get(&(source.clone(), target.clone()))
            .map_or(EdgeType::Non, |e| e.etype)
    }

    pub fn record(&self, source: &ParamRef, target: &ParamRef) -> Option<&EdgeRecord> {
        self.edges.get(&(source.clone(), target.clone()))
    }

    pub fn contains_param(&self, r: &ParamRef) -> bool {
        self.apis
            .get(&r.api_id)
            .is_some_and(|a| a.has_param(r.direction, &r.param_name))
    }

    /// APIs owning an output with an edge of a type in `mask` into
    /// `target_param`.
    pub fn connected_sources(&self, target_param: &ParamRef, mask: EdgeMask) -> Result<BTreeSet<String>, GraphError> {
        if target_param.direction != Direction::Input {
            return Err(GraphError::WrongDirection(target_param.clone()));
        }
        if !self.contains_param(target_param) {
            return Err(GraphError::Dangling(target_param.clone()));
        }
        Ok(self
            .incoming
            .get(target_param)
            .into_iter()
            .flatten()
            .filter(|(_, t)| mask.contains(*t))
            .map(|(s, _)| s.api_id.clone())
            .collect())
    }

    /// Distinct source outputs feeding `target_param` under `mask`.
    pub fn incoming_params(&self, target_param: &ParamRef, mask: EdgeMask) -> impl Iterator<Item = &ParamRef> {
        self.incoming
            .get(target_param)
            .into_iter()
            .flatten()
            .filter(move |(_, t)| mask.contains(*t))
            .map(|(s, _)| s)
    }

    /// API-level adjacency: A→B iff some masked edge runs from an output of
    /// A to an input of B.
    pub fn project_api_level(&self, mask: EdgeMask) -> ApiAdjacency {
        let mut adj = ApiAdjacency::new();
        for e in self.masked_edges(mask) {
            adj.entry(e.source.api_id.clone())
                .or_default()
                .insert(e.target.api_id.clone());
        }
        adj
    }

    /// Whether any masked edge runs from an output of `a` to an input of `b`.
    pub fn has_api_edge(&self, a: &str, b: &str, mask: EdgeMask) -> bool {
        let Some(api) = self.apis.get(b) else {
            return false;
        };
        api.inputs.iter().any(|p| {
            self.incoming
                .get(&ParamRef::input(b, &p.name))
                .into_iter()
                .flatten()
                .any(|(s, t)| s.api_id == a && mask.contains(*t))
        })
    }
}
