use std::collections::HashMap;

use super::{adjacency_edges, search, PatternSpec, SubsetCandidate};
use crate::docmodel::{Corpus, ParamRef};
use crate::graph::{ApiAdjacency, ApiGraph, EdgeMask};
use crate::providers::{param_text, prompts, similarity, ChatModel, Embedder, ProviderError};

/// Subsets a generator emits per run.
pub const CANDIDATES_PER_RUN: usize = 5;

/// Proposes up to [`CANDIDATES_PER_RUN`] subsets from a pool.
pub trait SubsetGenerator: Send + Sync {
    fn generate(
        &self,
        pool: &[String],
        pattern: &PatternSpec,
        seed: u64,
    ) -> Result<Vec<SubsetCandidate>, ProviderError>;

    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Depth-first walk over an adjacency, emitting the first matches in
/// api_id order.
#[derive(Debug, Clone)]
pub struct GraphWalkGenerator {
    adj: ApiAdjacency,
}

impl GraphWalkGenerator {
    pub fn from_graph(graph: &ApiGraph, mask: EdgeMask) -> Self {
        Self::from_adjacency(graph.project_api_level(mask))
    }

    pub fn from_adjacency(adj: ApiAdjacency) -> Self {
        GraphWalkGenerator { adj }
    }
}

impl SubsetGenerator for GraphWalkGenerator {
    fn generate(
        &self,
        pool: &[String],
        pattern: &PatternSpec,
        _seed: u64,
    ) -> Result<Vec<SubsetCandidate>, ProviderError> {
        let mut pool = pool.to_vec();
        pool.sort();
        pool.dedup();
        let edges = adjacency_edges(&self.adj, &pool);
        Ok(search(
            pool.len(),
            pattern,
            &|a, b| edges.contains(&(a, b)),
            Some(CANDIDATES_PER_RUN),
        )
        .into_iter()
        .map(|idx| SubsetCandidate::new(idx.into_iter().map(|i| pool[i].clone())))
        .collect())
    }
}

/// API adjacency guessed from documentation alone: A→B when some output of
/// A and input of B share a type category and their parameter texts reach
/// `threshold` similarity.
pub fn heuristic_adjacency<E: Embedder + ?Sized>(
    corpus: &Corpus,
    embedder: &E,
    threshold: f64,
) -> Result<ApiAdjacency, ProviderError> {
    let mut vectors: HashMap<ParamRef, Vec<f32>> = HashMap::new();
    for doc in corpus.apis() {
        for p in doc.inputs.iter().chain(&doc.outputs) {
            vectors.insert(
                ParamRef::new(&doc.api_id, p.direction, &p.name),
                embedder.embed(&param_text(p))?,
            );
        }
    }
    let mut adj = ApiAdjacency::new();
    for a in corpus.apis() {
        for b in corpus.apis() {
            if a.api_id == b.api_id {
                continue;
            }
            let linked = a.outputs.iter().any(|o| {
                b.inputs.iter().any(|i| {
                    o.ptype.category() == i.ptype.category()
                        && similarity(&vectors[&a.output_ref(&o.name)], &vectors[&b.input_ref(&i.name)]) >= threshold
                })
            });
            if linked {
                adj.entry(a.api_id.clone()).or_default().insert(b.api_id.clone());
            }
        }
    }
    Ok(adj)
}

/// Asks a chat model with the subset-selection prompt. With `connections`
/// set, known API links inside the pool are listed in the prompt.
pub struct ChatSubsetGenerator<'a, C> {
    model: C,
    corpus: &'a Corpus,
    connections: Option<ApiAdjacency>,
}

impl<'a, C: ChatModel> ChatSubsetGenerator<'a, C> {
    pub fn new(model: C, corpus: &'a Corpus, connections: Option<ApiAdjacency>) -> Self {
        ChatSubsetGenerator {
            model,
            corpus,
            connections,
        }
    }

    fn api_list_block(&self, pool: &[String]) -> String {
        let lines: Vec<String> = pool
            .iter()
            .map(|id| match self.corpus.get(id) {
                Some(d) => {
                    let ins: Vec<&str> = d.inputs.iter().map(|p| p.name.as_str()).collect();
                    let outs: Vec<&str> = d.outputs.iter().map(|p| p.name.as_str()).collect();
                    format!(
                        "{id}: {} | inputs: {} | outputs: {}",
                        d.description,
                        ins.join(", "),
                        outs.join(", ")
                    )
                }
                None => id.clone(),
            })
            .collect();
        format!("[\n{}\n]", lines.join("\n"))
    }

    fn connection_list(&self, pool: &[String]) -> Option<String> {
        let adj = self.connections.as_ref()?;
        let mut lines = Vec::new();
        for a in pool {
            for b in adj.get(a).into_iter().flatten() {
                if pool.contains(b) {
                    lines.push(format!("{a} -> {b}"));
                }
            }
        }
        Some(format!("[{}]", lines.join(", ")))
    }
}

impl<C: ChatModel> SubsetGenerator for ChatSubsetGenerator<'_, C> {
    fn generate(
        &self,
        pool: &[String],
        pattern: &PatternSpec,
        _seed: u64,
    ) -> Result<Vec<SubsetCandidate>, ProviderError> {
        let prompt = prompts::subset_prompt(
            pattern.n,
            &pattern.edges,
            &self.api_list_block(pool),
            self.connection_list(pool).as_deref(),
        );
        let reply = self.model.complete(&prompt)?;
        Ok(prompts::parse_subset_reply(&reply, pattern.n)
            .into_iter()
            .take(CANDIDATES_PER_RUN)
            .map(SubsetCandidate::new)
            .collect())
    }

    fn concurrent_safe(&self) -> bool {
        self.model.concurrent_safe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsets::tests::graph_from;
    use crate::subsets::{pattern_edges, PatternKind};

    #[test]
    fn walk_emits_at_most_five_valid() {
        let g = graph_from(
            &["A", "B", "C", "D", "E", "F"],
            &[("A", "B"), ("A", "C"), ("A", "D"), ("A", "E"), ("A", "F")],
        );
        let gen = GraphWalkGenerator::from_graph(&g, EdgeMask::default());
        let pool: Vec<String> = ["F", "E", "D", "C", "B", "A"].iter().map(|s| s.to_string()).collect();
        let p = pattern_edges(PatternKind::Fork, 3).unwrap();
        let out = gen.generate(&pool, &p, 0).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(out[0], SubsetCandidate::new(["A", "B", "C"]));
        let chain = pattern_edges(PatternKind::Chain, 3).unwrap();
        assert!(gen.generate(&pool, &chain, 0).unwrap().is_empty());
    }

    struct Reply(String);
    impl ChatModel for Reply {
        fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
            assert!(prompt.contains("1->2, 2->3"));
            Ok(self.0.clone())
        }
    }

    #[test]
    fn chat_generator_parses_groups() {
        let corpus = Corpus::new(vec![]).unwrap();
        let m = Reply("APIs: 1: A, 2: B, 3: C\n---\nAPIs: 1: B, 2: C\nAPIs: 1: C, 2: B, 3: A".into());
        let gen = ChatSubsetGenerator::new(m, &corpus, None);
        let p = pattern_edges(PatternKind::Chain, 3).unwrap();
        let out = gen.generate(&["A".into(), "B".into(), "C".into()], &p, 0).unwrap();
        assert_eq!(
            out,
            vec![
                SubsetCandidate::new(["A", "B", "C"]),
                SubsetCandidate::new(["C", "B", "A"])
            ]
        );
    }
}
