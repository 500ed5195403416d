use serde::{Deserialize, Serialize};

use super::{
    ApiGraph, ApiSummary, Compatibility, EdgeRecord, EdgeType, GraphError, Label, LabelRow, Naturalness, ParamSummary,
    Provenance,
};
use crate::docmodel::ParamRef;

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GraphFile {
    version: u32,
    apis: Vec<ApiRow>,
    edges: Vec<EdgeRow>,
}

#[derive(Serialize, Deserialize)]
struct ApiRow {
    api_id: String,
    domain: String,
    inputs: Vec<ParamSummary>,
    outputs: Vec<ParamSummary>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    source_api: String,
    source_param: String,
    target_api: String,
    target_param: String,
    #[serde(rename = "type")]
    etype: EdgeType,
    provenance: Provenance,
}

/// Pretty JSON with APIs sorted by id and edges by (source, target).
pub fn serialize(graph: &ApiGraph) -> String {
    let file = GraphFile {
        version: GRAPH_FORMAT_VERSION,
        apis: graph
            .apis()
            .iter()
            .map(|(id, a)| ApiRow {
                api_id: id.clone(),
                domain: a.domain.clone(),
                inputs: a.inputs.clone(),
                outputs: a.outputs.clone(),
            })
            .collect(),
        edges: graph
            .edges()
            .map(|e| EdgeRow {
                source_api: e.source.api_id.clone(),
                source_param: e.source.param_name.clone(),
                target_api: e.target.api_id.clone(),
                target_param: e.target.param_name.clone(),
                etype: e.etype,
                provenance: e.provenance,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("graph serializes");
    out.push('\n');
    out
}

pub fn deserialize(text: &str) -> Result<ApiGraph, GraphError> {
    let file: GraphFile = serde_json::from_str(text).map_err(GraphError::from_json)?;
    if file.version != GRAPH_FORMAT_VERSION {
        return Err(GraphError::Version(file.version));
    }
    let mut apis = std::collections::BTreeMap::new();
    for a in file.apis {
        let id = a.api_id.clone();
        let prev = apis.insert(
            a.api_id,
            ApiSummary {
                domain: a.domain,
                inputs: a.inputs,
                outputs: a.outputs,
            },
        );
        if prev.is_some() {
            return Err(GraphError::Parse {
                line: 0,
                column: 0,
                message: format!("duplicate api {id}"),
            });
        }
    }
    let edges = file.edges.into_iter().map(|e| EdgeRecord {
        source: ParamRef::output(e.source_api, e.source_param),
        target: ParamRef::input(e.target_api, e.target_param),
        etype: e.etype,
        provenance: e.provenance,
    });
    ApiGraph::from_parts(apis, edges)
}

#[derive(Serialize, Deserialize)]
struct LabelFileRow {
    source_api: String,
    source_param: String,
    target_api: String,
    target_param: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    etype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    compatibility: Option<Compatibility>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    naturalness: Option<Naturalness>,
    #[serde(default)]
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    calibration: bool,
}

/// Reads a JSON array of label rows. Each row carries either `type`
/// (`strong`, `weak`, `non`, optionally with an `-edge` suffix) or both
/// `compatibility` and `naturalness`.
pub fn read_labels(text: &str) -> Result<Vec<LabelRow>, GraphError> {
    let rows: Vec<LabelFileRow> = serde_json::from_str(text).map_err(GraphError::from_json)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let label = match (r.etype, r.compatibility, r.naturalness) {
                (None, Some(c), Some(n)) => Label::Criteria {
                    compatibility: c,
                    naturalness: n,
                },
                (Some(t), None, None) => {
                    Label::Typed(EdgeType::parse_label(&t).ok_or_else(|| GraphError::InvalidLabel {
                        row: i,
                        reason: format!("unknown type {t:?}"),
                    })?)
                }
                (Some(t), Some(c), Some(n)) => {
                    let derived = super::derive_edge_type(c, n);
                    if EdgeType::parse_label(&t) != Some(derived) {
                        return Err(GraphError::InvalidLabel {
                            row: i,
                            reason: format!("type {t:?} contradicts {}/{}", c.as_str(), n.as_str()),
                        });
                    }
                    Label::Criteria {
                        compatibility: c,
                        naturalness: n,
                    }
                }
                _ => {
                    return Err(GraphError::InvalidLabel {
                        row: i,
                        reason: "needs `type` or both `compatibility` and `naturalness`".into(),
                    })
                }
            };
            Ok(LabelRow {
                source: ParamRef::output(r.source_api, r.source_param),
                target: ParamRef::input(r.target_api, r.target_param),
                label,
                provenance: r.provenance,
                calibration: r.calibration,
            })
        })
        .collect()
}

/// Label rows as a JSON array; criteria rows also carry the derived `type`.
pub fn labels_to_value(rows: &[LabelRow]) -> serde_json::Value {
    let out: Vec<LabelFileRow> = rows
        .iter()
        .map(|r| {
            let (compatibility, naturalness) = match r.label {
                Label::Criteria {
                    compatibility,
                    naturalness,
                } => (Some(compatibility), Some(naturalness)),
                Label::Typed(_) => (None, None),
            };
            LabelFileRow {
                source_api: r.source.api_id.clone(),
                source_param: r.source.param_name.clone(),
                target_api: r.target.api_id.clone(),
                target_param: r.target.param_name.clone(),
                etype: Some(r.edge_type().as_str().to_string()),
                compatibility,
                naturalness,
                provenance: r.provenance,
                calibration: r.calibration,
            }
        })
        .collect();
    serde_json::to_value(out).expect("labels serialize")
}

/// Pretty JSON text of [`labels_to_value`].
pub fn write_labels(rows: &[LabelRow]) -> String {
    let mut s = serde_json::to_string_pretty(&labels_to_value(rows)).expect("labels serialize");
    s.push('\n');
    s
}
