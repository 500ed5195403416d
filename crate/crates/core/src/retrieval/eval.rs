use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    api_text, embed, final_select, rank_with_cache, rerank_with_graph, RetrievalError, RetrievalInstance, Selector,
};
use crate::docmodel::Corpus;
use crate::graph::{ApiGraph, EdgeMask};
use crate::providers::Embedder;

/// Cut-offs reported as top-k accuracy.
pub const TOP_K: [usize; 5] = [1, 2, 5, 10, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub instances: usize,
    pub avg_rank: f64,
    pub worst_rank: usize,
    /// k → percentage of instances with the gold API within the top k.
    pub top_k: BTreeMap<usize, f64>,
    /// Percentage of instances where the final selection is the gold API.
    pub final_selection_acc: f64,
}

impl RetrievalMetrics {
    /// Metrics from 1-based gold ranks and per-instance selection outcomes.
    pub fn from_outcomes(ranks: &[usize], correct: &[bool]) -> Self {
        assert_eq!(ranks.len(), correct.len());
        let n = ranks.len();
        let pct = |count: usize| if n == 0 { 0.0 } else { 100.0 * count as f64 / n as f64 };
        let top_k = TOP_K.iter().map(|&k| (k, top_k_accuracy(ranks, k))).collect();
        RetrievalMetrics {
            instances: n,
            avg_rank: if n == 0 {
                0.0
            } else {
                ranks.iter().sum::<usize>() as f64 / n as f64
            },
            worst_rank: ranks.iter().copied().max().unwrap_or(0),
            top_k,
            final_selection_acc: pct(correct.iter().filter(|c| **c).count()),
        }
    }
}

/// Percentage of 1-based `ranks` that are at most `k`.
pub fn top_k_accuracy(ranks: &[usize], k: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub target_api: String,
    pub missing_param: String,
    pub gold_api: String,
    pub candidates: usize,
    /// Gold rank by similarity alone.
    pub similarity_rank: usize,
    /// Gold rank after graph re-ranking (equal to `similarity_rank` without
    /// a graph).
    pub rank: usize,
    pub selected: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub mask: EdgeMask,
    pub graph: bool,
    pub metrics: RetrievalMetrics,
    pub outcomes: Vec<InstanceOutcome>,
}

impl RetrievalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Ranks, optionally re-ranks with `graph`, and selects for every instance.
/// A selector abstention or a gold API outside the shortlist counts as an
/// incorrect selection.
pub fn evaluate_retrieval<E, S>(
    instances: &[RetrievalInstance],
    corpus: &Corpus,
    graph: Option<&ApiGraph>,
    embedder: &E,
    selector: &S,
    mask: EdgeMask,
) -> Result<RetrievalReport, RetrievalError>
where
    E: Embedder + ?Sized,
    S: Selector + ?Sized,
{
    if instances.is_empty() {
        return Err(RetrievalError::NoInstances);
    }
    for (i, inst) in instances.iter().enumerate() {
        inst.validate(corpus, i)?;
    }

    let ids: Vec<&String> = instances
        .iter()
        .flat_map(|i| i.candidates.iter())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let embed_api = |id: &&String| {
        let doc = corpus
            .get(id)
            .ok_or_else(|| RetrievalError::UnknownApi((*id).clone()))?;
        Ok(((*id).clone(), embed(embedder, id, &api_text(doc))?))
    };
    let api_vectors: HashMap<String, Vec<f32>> = if embedder.concurrent_safe() {
        ids.par_iter().map(embed_api).collect::<Result<_, RetrievalError>>()?
    } else {
        ids.iter().map(embed_api).collect::<Result<_, RetrievalError>>()?
    };

    let run = |inst: &RetrievalInstance| -> Result<InstanceOutcome, RetrievalError> {
        let ranked = rank_with_cache(inst, corpus, embedder, &api_vectors)?;
        let similarity_rank = ranked.rank_of(&inst.gold_api).expect("gold is a candidate");
        let ranked = match graph {
            Some(g) => rerank_with_graph(&ranked, g, &inst.missing_param, mask)?,
            None => ranked,
        };
        let rank = ranked.rank_of(&inst.gold_api).expect("gold is a candidate");
        let selected = final_select(&ranked, inst, corpus, selector)?;
        Ok(InstanceOutcome {
            target_api: inst.target_api.clone(),
            missing_param: inst.missing_param.param_name.clone(),
            gold_api: inst.gold_api.clone(),
            candidates: inst.candidates.len(),
            similarity_rank,
            rank,
            correct: selected.as_deref() == Some(inst.gold_api.as_str()),
            selected,
        })
    };
    let outcomes: Vec<InstanceOutcome> = if embedder.concurrent_safe() && selector.concurrent_safe() {
        instances.par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        instances.iter().map(run).collect::<Result<_, _>>()?
    };

    let ranks: Vec<usize> = outcomes.iter().map(|o| o.rank).collect();
    let correct: Vec<bool> = outcomes.iter().map(|o| o.correct).collect();
    Ok(RetrievalReport {
        mask,
        graph: graph.is_some(),
        metrics: RetrievalMetrics::from_outcomes(&ranks, &correct),
        outcomes,
    })
}

/// Aligned table with one row per condition.
pub fn metrics_table(rows: &[(&str, &RetrievalMetrics)]) -> String {
    let mut header = vec!["Condition".to_string(), "Avg Rank".into(), "Worst Rank".into()];
    header.extend(TOP_K.iter().map(|k| format!("Top-{k}")));
    header.push("Final Sel. Acc".into());
    let mut lines = vec![header];
    for (name, m) in rows {
        let mut line = vec![name.to_string(), format!("{:.2}", m.avg_rank), m.worst_rank.to_string()];
        line.extend(TOP_K.iter().map(|k| format!("{:.1}", m.top_k[k])));
        line.push(format!("{:.1}", m.final_selection_acc));
        lines.push(line);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .enumerate()
            .map(|(c, v)| {
                if c == 0 {
                    format!("{v:<w$}", w = widths[c])
                } else {
                    format!("{v:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_rank_one() {
        let m = RetrievalMetrics::from_outcomes(&[1, 1, 1], &[true, true, true]);
        assert_eq!(m.avg_rank, 1.0);
        assert_eq!(m.worst_rank, 1);
        assert!(m.top_k.values().all(|v| *v == 100.0));
        assert_eq!(m.final_selection_acc, 100.0);
    }

    #[test]
    fn mixed_ranks() {
        let m = RetrievalMetrics::from_outcomes(&[1, 3, 12, 2], &[true, false, false, false]);
        assert_eq!(m.avg_rank, 4.5);
        assert_eq!(m.worst_rank, 12);
        assert_eq!(m.top_k[&1], 25.0);
        assert_eq!(m.top_k[&2], 50.0);
        assert_eq!(m.top_k[&5], 75.0);
        assert_eq!(m.top_k[&20], 100.0);
        assert_eq!(m.final_selection_acc, 25.0);
        let t = metrics_table(&[("no graph", &m)]);
        assert!(t.lines().next().unwrap().starts_with("Condition"));
        assert!(t.contains("4.50"));
    }
}
