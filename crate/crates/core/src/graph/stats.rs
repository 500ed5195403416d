use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ApiGraph, EdgeMask, EdgeType};

/// Which nodes the average in-degree is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Nodes with at least one incoming edge.
    #[default]
    ActiveNodes,
    /// Every input parameter (or every API).
    AllNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub strong: usize,
    pub weak: usize,
    pub non: usize,
}

impl EdgeCounts {
    pub fn get(&self, t: EdgeType) -> usize {
        match t {
            EdgeType::Strong => self.strong,
            EdgeType::Weak => self.weak,
            EdgeType::Non => self.non,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub mask: EdgeMask,
    pub denominator: Denominator,
    pub d_avg_param: f64,
    pub d_avg_api: f64,
    pub cross_param_pct: f64,
    pub cross_api_pct: f64,
    /// Stored edges per type, independent of the mask.
    pub counts: EdgeCounts,
    pub param_edges: usize,
    pub api_edges: usize,
    pub active_inputs: usize,
    pub active_apis: usize,
    pub input_params: usize,
    pub apis: usize,
}

pub fn compute_stats(graph: &ApiGraph, mask: EdgeMask) -> GraphStats {
    compute_stats_with(graph, mask, Denominator::default())
}

pub fn compute_stats_with(graph: &ApiGraph, mask: EdgeMask, denominator: Denominator) -> GraphStats {
    let mut counts = EdgeCounts::default();
    for e in graph.edges() {
        match e.etype {
            EdgeType::Strong => counts.strong += 1,
            EdgeType::Weak => counts.weak += 1,
            EdgeType::Non => counts.non += 1,
        }
    }

    // (target input, source output) pairs are unique in a graph, so the
    // number of masked edges equals the sum of distinct sources per input.
    let mut param_edges = 0usize;
    let mut cross_param = 0usize;
    let mut active_inputs = BTreeSet::new();
    for e in graph.masked_edges(mask) {
        param_edges += 1;
        active_inputs.insert(&e.target);
        if graph.domain_of(&e.source.api_id) != graph.domain_of(&e.target.api_id) {
            cross_param += 1;
        }
    }

    let adj = graph.project_api_level(mask);
    let mut api_edges = 0usize;
    let mut cross_api = 0usize;
    let mut active_apis = BTreeSet::new();
    for (a, targets) in &adj {
        for b in targets {
            api_edges += 1;
            active_apis.insert(b);
            if graph.domain_of(a) != graph.domain_of(b) {
                cross_api += 1;
            }
        }
    }

    let input_params: usize = graph.apis().values().map(|a| a.inputs.len()).sum();
    let apis = graph.apis().len();
    let (param_den, api_den) = match denominator {
        Denominator::ActiveNodes => (active_inputs.len(), active_apis.len()),
        Denominator::AllNodes => (input_params, apis),
    };

    GraphStats {
        mask,
        denominator,
        d_avg_param: ratio(param_edges, param_den),
        d_avg_api: ratio(api_edges, api_den),
        cross_param_pct: 100.0 * ratio(cross_param, param_edges),
        cross_api_pct: 100.0 * ratio(cross_api, api_edges),
        counts,
        param_edges,
        api_edges,
        active_inputs: active_inputs.len(),
        active_apis: active_apis.len(),
        input_params,
        apis,
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl GraphStats {
    /// Aligned plain-text rendering.
    pub fn table(&self) -> String {
        let rows = [
            ("mask", self.mask.to_string()),
            ("denominator", format!("{:?}", self.denominator)),
            ("strong edges", self.counts.strong.to_string()),
            ("weak edges", self.counts.weak.to_string()),
            ("stored non edges", self.counts.non.to_string()),
            ("param -> param edges", self.param_edges.to_string()),
            ("api -> api edges", self.api_edges.to_string()),
            ("d_avg param", format!("{:.4}", self.d_avg_param)),
            ("d_avg api", format!("{:.4}", self.d_avg_api)),
            ("cross-domain param %", format!("{:.2}", self.cross_param_pct)),
            ("cross-domain api %", format!("{:.2}", self.cross_api_pct)),
        ];
        let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
    }
}
