use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    derive_edge_type, ApiGraph, ApiSummary, Compatibility, EdgeRecord, EdgeType, GraphError, Naturalness, ParamSummary,
    Provenance,
};
use crate::docmodel::{Corpus, Direction, ParamRef};

/// A label either as the two annotation criteria or as a direct edge type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Criteria {
        compatibility: Compatibility,
        naturalness: Naturalness,
    },
    Typed(EdgeType),
}

impl Label {
    pub fn edge_type(self) -> EdgeType {
        match self {
            Label::Criteria {
                compatibility,
                naturalness,
            } => derive_edge_type(compatibility, naturalness),
            Label::Typed(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub source: ParamRef,
    pub target: ParamRef,
    pub label: Label,
    pub provenance: Provenance,
    /// Labeled jointly during annotator calibration.
    pub calibration: bool,
}

impl LabelRow {
    pub fn typed(source: ParamRef, target: ParamRef, etype: EdgeType) -> Self {
        LabelRow {
            source,
            target,
            label: Label::Typed(etype),
            provenance: Provenance::Human,
            calibration: false,
        }
    }

    pub fn criteria(source: ParamRef, target: ParamRef, c: Compatibility, n: Naturalness) -> Self {
        LabelRow {
            source,
            target,
            label: Label::Criteria {
                compatibility: c,
                naturalness: n,
            },
            provenance: Provenance::Human,
            calibration: false,
        }
    }

    pub fn edge_type(&self) -> EdgeType {
        self.label.edge_type()
    }
}

pub(crate) fn summarize(corpus: &Corpus) -> BTreeMap<String, ApiSummary> {
    corpus
        .apis()
        .iter()
        .map(|d| {
            let conv = |ps: &[crate::docmodel::ParamSpec]| {
                ps.iter()
                    .map(|p| ParamSummary {
                        name: p.name.clone(),
                        ptype: p.ptype,
                    })
                    .collect()
            };
            (
                d.api_id.clone(),
                ApiSummary {
                    domain: d.domain.clone(),
                    inputs: conv(&d.inputs),
                    outputs: conv(&d.outputs),
                },
            )
        })
        .collect()
}

/// Builds a graph from labels. Non labels are kept only when a human or a
/// model produced them; every other unlabeled pair is implicitly non.
pub fn build_graph(corpus: &Corpus, labels: &[LabelRow]) -> Result<ApiGraph, GraphError> {
    let mut seen: HashMap<(&ParamRef, &ParamRef), &LabelRow> = HashMap::new();
    let mut edges = Vec::new();
    for row in labels {
        for (r, dir) in [(&row.source, Direction::Output), (&row.target, Direction::Input)] {
            if r.direction != dir {
                return Err(GraphError::WrongDirection(r.clone()));
            }
            if corpus.resolve(r).is_none() {
                return Err(GraphError::Dangling(r.clone()));
            }
        }
        if let Some(prev) = seen.insert((&row.source, &row.target), row) {
            return Err(GraphError::Duplicate {
                from: row.source.clone(),
                target: row.target.clone(),
                first: describe(prev),
                second: describe(row),
            });
        }
        let etype = row.edge_type();
        if etype == EdgeType::Non && row.provenance == Provenance::Oracle {
            continue;
        }
        edges.push(EdgeRecord {
            source: row.source.clone(),
            target: row.target.clone(),
            etype,
            provenance: row.provenance,
        });
    }
    ApiGraph::from_parts(summarize(corpus), edges)
}

fn describe(row: &LabelRow) -> String {
    match row.label {
        Label::Criteria {
            compatibility,
            naturalness,
        } => format!(
            "{}/{} -> {} ({:?})",
            compatibility.as_str(),
            naturalness.as_str(),
            row.edge_type(),
            row.provenance
        ),
        Label::Typed(t) => format!("{t} ({:?})", row.provenance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::{ApiDoc, ParamSpec, PrimitiveType};
    use crate::graph::EdgeMask;

    fn corpus() -> Corpus {
        let api = |id: &str, domain: &str, ins: &[&str], outs: &[&str]| ApiDoc {
            api_id: id.into(),
            domain: domain.into(),
            description: String::new(),
            inputs: ins
                .iter()
                .map(|n| ParamSpec::input(*n, PrimitiveType::Str, "x"))
                .collect(),
            outputs: outs
                .iter()
                .map(|n| ParamSpec::output(*n, PrimitiveType::Str, "x"))
                .collect(),
        };
        Corpus::new(vec![
            api("A", "d1", &[], &["tok", "id"]),
            api("B", "d1", &["tok", "id"], &["x"]),
            api("C", "d2", &["tok"], &[]),
        ])
        .unwrap()
    }

    #[test]
    fn empty_labels_give_no_edges() {
        let g = build_graph(&corpus(), &[]).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.apis().len(), 3);
    }

    #[test]
    fn duplicate_is_an_error_naming_both() {
        let rows = vec![
            LabelRow::typed(
                ParamRef::output("A", "tok"),
                ParamRef::input("B", "tok"),
                EdgeType::Strong,
            ),
            LabelRow::typed(
                ParamRef::output("A", "tok"),
                ParamRef::input("B", "tok"),
                EdgeType::Weak,
            ),
        ];
        let err = build_graph(&corpus(), &rows).unwrap_err().to_string();
        assert!(err.contains("strong") && err.contains("weak"), "{err}");
    }

    #[test]
    fn dangling_and_wrong_direction() {
        let rows = vec![LabelRow::typed(
            ParamRef::output("A", "nope"),
            ParamRef::input("B", "tok"),
            EdgeType::Strong,
        )];
        assert!(matches!(build_graph(&corpus(), &rows), Err(GraphError::Dangling(_))));
        let rows = vec![LabelRow::typed(
            ParamRef::input("B", "tok"),
            ParamRef::input("C", "tok"),
            EdgeType::Strong,
        )];
        assert!(matches!(
            build_graph(&corpus(), &rows),
            Err(GraphError::WrongDirection(_))
        ));
    }

    #[test]
    fn criteria_rows_derive_types_and_parallel_edges_project_once() {
        let rows = vec![
            LabelRow::criteria(
                ParamRef::output("A", "tok"),
                ParamRef::input("B", "tok"),
                Compatibility::Compatible,
                Naturalness::Natural,
            ),
            LabelRow::typed(
                ParamRef::output("A", "id"),
                ParamRef::input("B", "id"),
                EdgeType::Strong,
            ),
            LabelRow::criteria(
                ParamRef::output("A", "tok"),
                ParamRef::input("C", "tok"),
                Compatibility::Compatible,
                Naturalness::Unnatural,
            ),
        ];
        let g = build_graph(&corpus(), &rows).unwrap();
        assert_eq!(g.edge_type(&rows[0].source, &rows[0].target), EdgeType::Strong);
        assert_eq!(g.edge_type(&rows[2].source, &rows[2].target), EdgeType::Non);
        let adj = g.project_api_level(EdgeMask::default());
        assert_eq!(adj.len(), 1);
        assert_eq!(adj["A"].iter().collect::<Vec<_>>(), vec!["B"]);
        assert!(g
            .connected_sources(&ParamRef::input("B", "tok"), EdgeMask::WEAK)
            .unwrap()
            .is_empty());
        assert!(g
            .connected_sources(&ParamRef::input("C", "tok"), EdgeMask::default())
            .unwrap()
            .is_empty());
        assert!(g
            .connected_sources(&ParamRef::input("C", "zzz"), EdgeMask::default())
            .is_err());
    }
}
