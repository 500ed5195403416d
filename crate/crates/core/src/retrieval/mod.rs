//! Prerequisite-API retrieval: similarity ranking, graph-aware re-ranking,
//! final selection and rank metrics.

mod eval;
mod select;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::docmodel::{ApiDoc, Corpus, Direction, ParamRef};
use crate::graph::{ApiGraph, EdgeMask, GraphError};
use crate::providers::{similarity, Embedder, ProviderError};

pub use eval::{
    evaluate_retrieval, metrics_table, top_k_accuracy, InstanceOutcome, RetrievalMetrics, RetrievalReport, TOP_K,
};
pub use select::{final_select, ChatSelector, Selector, TopRankSelector, SHORTLIST};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("invalid instance {index}: {reason}")]
    Instance { index: usize, reason: String },
    #[error("unknown api {0}")]
    UnknownApi(String),
    #[error("parameter {0} has no description")]
    NoDescription(ParamRef),
    #[error("embedding failed for {what}: {error}")]
    Embedding { what: String, error: ProviderError },
    #[error("selector failed: {0}")]
    Selector(ProviderError),
    #[error("selector chose {chosen:?}, which is not in the shortlist {shortlist:?}")]
    OutsideShortlist { chosen: String, shortlist: Vec<String> },
    #[error("empty shortlist")]
    EmptyShortlist,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no instances")]
    NoInstances,
    #[error("malformed instance file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A task whose target API lacks one input that a prerequisite API supplies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalInstance {
    pub query: String,
    pub target_api: String,
    pub missing_param: ParamRef,
    pub gold_api: String,
    pub candidates: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRow {
    query: String,
    target_api: String,
    missing_param: String,
    gold_api: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<String>>,
}

impl RetrievalInstance {
    /// Builds an instance whose candidates are every corpus API except the
    /// target.
    pub fn new(
        corpus: &Corpus,
        query: impl Into<String>,
        target_api: &str,
        missing_param: &str,
        gold_api: &str,
    ) -> Result<Self, RetrievalError> {
        let inst = RetrievalInstance {
            query: query.into(),
            target_api: target_api.to_string(),
            missing_param: ParamRef::input(target_api, missing_param),
            gold_api: gold_api.to_string(),
            candidates: default_candidates(corpus, target_api),
        };
        inst.validate(corpus, 0)?;
        Ok(inst)
    }

    pub fn validate(&self, corpus: &Corpus, index: usize) -> Result<(), RetrievalError> {
        let bad = |reason: String| RetrievalError::Instance { index, reason };
        let target = corpus
            .get(&self.target_api)
            .ok_or_else(|| bad(format!("unknown target api {}", self.target_api)))?;
        if self.missing_param.api_id != self.target_api
            || self.missing_param.direction != Direction::Input
            || target.input(&self.missing_param.param_name).is_none()
        {
            return Err(bad(format!(
                "{} is not an input of {}",
                self.missing_param, self.target_api
            )));
        }
        if !self.candidates.contains(&self.gold_api) {
            return Err(bad(format!("gold api {} is not a candidate", self.gold_api)));
        }
        let mut seen = BTreeSet::new();
        for c in &self.candidates {
            if corpus.get(c).is_none() {
                return Err(bad(format!("unknown candidate {c}")));
            }
            if !seen.insert(c) {
                return Err(bad(format!("duplicate candidate {c}")));
            }
        }
        Ok(())
    }
}

fn default_candidates(corpus: &Corpus, target_api: &str) -> Vec<String> {
    corpus
        .apis()
        .iter()
        .filter(|d| d.api_id != target_api)
        .map(|d| d.api_id.clone())
        .collect()
}

/// Reads a JSON array of `{query, target_api, missing_param, gold_api,
/// candidates?}` rows, where `missing_param` names an input of
/// `target_api`.
pub fn read_instances(text: &str, corpus: &Corpus) -> Result<Vec<RetrievalInstance>, RetrievalError> {
    let rows: Vec<InstanceRow> = serde_json::from_str(text)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let inst = RetrievalInstance {
                candidates: r
                    .candidates
                    .unwrap_or_else(|| default_candidates(corpus, &r.target_api)),
                missing_param: ParamRef::input(&r.target_api, r.missing_param),
                query: r.query,
                target_api: r.target_api,
                gold_api: r.gold_api,
            };
            inst.validate(corpus, i)?;
            Ok(inst)
        })
        .collect()
}

/// Candidates in rank order with their similarity scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    entries: Vec<(String, f64)>,
}

impl RankedList {
    /// Wraps an already ordered list. Panics on duplicate ids.
    pub fn from_entries(entries: Vec<(String, f64)>) -> Self {
        let mut seen = BTreeSet::new();
        for (id, _) in &entries {
            assert!(seen.insert(id.as_str()), "duplicate api {id} in ranked list");
        }
        RankedList { entries }
    }

    pub fn from_ids<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Self {
        Self::from_entries(ids.into_iter().map(|s| (s.into(), 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(id, _)| id.as_str()).collect()
    }

    /// 1-based rank of `api_id`.
    pub fn rank_of(&self, api_id: &str) -> Option<usize> {
        self.entries.iter().position(|(id, _)| id == api_id).map(|i| i + 1)
    }

    pub fn top(&self, k: usize) -> Vec<&str> {
        self.entries.iter().take(k).map(|(id, _)| id.as_str()).collect()
    }
}

/// Embedding text of a candidate API: id, description and parameter names.
pub fn api_text(doc: &ApiDoc) -> String {
    let mut parts = vec![doc.api_id.clone(), doc.description.clone()];
    parts.extend(doc.inputs.iter().map(|p| p.name.clone()));
    parts.extend(doc.outputs.iter().map(|p| p.name.clone()));
    parts.join(" ")
}

fn query_text(corpus: &Corpus, inst: &RetrievalInstance) -> Result<String, RetrievalError> {
    let (_, spec) = corpus
        .resolve_or_err(&inst.missing_param)
        .map_err(|_| RetrievalError::UnknownApi(inst.target_api.clone()))?;
    if spec.description.trim().is_empty() {
        return Err(RetrievalError::NoDescription(inst.missing_param.clone()));
    }
    Ok(spec.description.clone())
}

fn embed<E: Embedder + ?Sized>(embedder: &E, what: &str, text: &str) -> Result<Vec<f32>, RetrievalError> {
    embedder.embed(text).map_err(|error| RetrievalError::Embedding {
        what: what.to_string(),
        error,
    })
}

/// Sorts by descending score, ties by ascending api_id.
fn sort_scored(mut scored: Vec<(String, f64)>) -> RankedList {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    RankedList::from_entries(scored)
}

/// Ranks the instance's candidates by cosine similarity between the missing
/// parameter's description and each candidate's [`api_text`].
pub fn rank_by_similarity<E: Embedder + ?Sized>(
    instance: &RetrievalInstance,
    corpus: &Corpus,
    embedder: &E,
) -> Result<RankedList, RetrievalError> {
    let q = embed(
        embedder,
        &instance.missing_param.to_string(),
        &query_text(corpus, instance)?,
    )?;
    let mut scored = Vec::with_capacity(instance.candidates.len());
    for c in &instance.candidates {
        let doc = corpus.get(c).ok_or_else(|| RetrievalError::UnknownApi(c.clone()))?;
        let v = embed(embedder, c, &api_text(doc))?;
        scored.push((c.clone(), similarity(&q, &v)));
    }
    Ok(sort_scored(scored))
}

/// Same as [`rank_by_similarity`] with precomputed API embeddings.
pub(crate) fn rank_with_cache<E: Embedder + ?Sized>(
    instance: &RetrievalInstance,
    corpus: &Corpus,
    embedder: &E,
    api_vectors: &HashMap<String, Vec<f32>>,
) -> Result<RankedList, RetrievalError> {
    let q = embed(
        embedder,
        &instance.missing_param.to_string(),
        &query_text(corpus, instance)?,
    )?;
    let scored = instance
        .candidates
        .iter()
        .map(|c| {
            let v = api_vectors
                .get(c)
                .ok_or_else(|| RetrievalError::UnknownApi(c.clone()))?;
            Ok((c.clone(), similarity(&q, v)))
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;
    Ok(sort_scored(scored))
}

/// Stable two-block partition: members of `connected` first, each block in
/// its prior order.
pub fn rerank_by_set(ranked: &RankedList, connected: &BTreeSet<String>) -> RankedList {
    let (front, back): (Vec<_>, Vec<_>) = ranked
        .entries
        .iter()
        .cloned()
        .partition(|(id, _)| connected.contains(id));
    RankedList {
        entries: front.into_iter().chain(back).collect(),
    }
}

/// Promotes candidates connected to `missing_param` in `graph` under `mask`.
pub fn rerank_with_graph(
    ranked: &RankedList,
    graph: &ApiGraph,
    missing_param: &ParamRef,
    mask: EdgeMask,
) -> Result<RankedList, RetrievalError> {
    let connected = graph.connected_sources(missing_param, mask)?;
    Ok(rerank_by_set(ranked, &connected))
}
