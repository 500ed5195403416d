use super::ApiDoc;
use crate::providers::{param_text, similarity, Embedder, ProviderError};

/// Maximum number of outputs kept per API.
pub const MAX_OUTPUTS: usize = 20;

/// Assigns an importance score to each output of an API (higher is kept
/// first).
pub trait OutputRanker {
    fn scores(&self, doc: &ApiDoc) -> Result<Vec<f64>, ProviderError>;
}

/// Earlier outputs in the documentation rank higher.
#[derive(Debug, Clone, Copy, Default)]
pub struct DocumentationOrder;

impl OutputRanker for DocumentationOrder {
    fn scores(&self, doc: &ApiDoc) -> Result<Vec<f64>, ProviderError> {
        Ok((0..doc.outputs.len()).map(|i| -(i as f64)).collect())
    }
}

/// Ranks outputs by embedding similarity to the API's own description.
pub struct SimilarityRanker<E> {
    embedder: E,
}

impl<E: Embedder> SimilarityRanker<E> {
    pub fn new(embedder: E) -> Self {
        Self { embedder }
    }
}

impl<E: Embedder> OutputRanker for SimilarityRanker<E> {
    fn scores(&self, doc: &ApiDoc) -> Result<Vec<f64>, ProviderError> {
        let anchor = self.embedder.embed(&format!("{}: {}", doc.api_id, doc.description))?;
        doc.outputs
            .iter()
            .map(|p| Ok(similarity(&anchor, &self.embedder.embed(&param_text(p))?)))
            .collect()
    }
}

/// Keeps the `limit` highest-scored outputs (ties broken by documentation
/// order). Retained outputs stay in documentation order.
pub fn prune_outputs(doc: &ApiDoc, ranker: &dyn OutputRanker, limit: usize) -> Result<ApiDoc, ProviderError> {
    if doc.outputs.len() <= limit {
        return Ok(doc.clone());
    }
    let scores = ranker.scores(doc)?;
    if scores.len() != doc.outputs.len() {
        return Err(ProviderError::Other(format!(
            "ranker returned {} scores for {} outputs",
            scores.len(),
            doc.outputs.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order.into_iter().take(limit).collect();
    keep.sort_unstable();
    let mut pruned = doc.clone();
    pruned.outputs = keep.into_iter().map(|i| doc.outputs[i].clone()).collect();
    Ok(pruned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::{ParamSpec, PrimitiveType};

    fn doc_with_outputs(n: usize) -> ApiDoc {
        ApiDoc {
            api_id: "A".into(),
            domain: "d".into(),
            description: String::new(),
            inputs: vec![],
            outputs: (1..=n)
                .map(|i| ParamSpec::output(format!("o{i}"), PrimitiveType::Str, ""))
                .collect(),
        }
    }

    struct Fixed(Vec<f64>);
    impl OutputRanker for Fixed {
        fn scores(&self, _doc: &ApiDoc) -> Result<Vec<f64>, ProviderError> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn under_limit_is_identity() {
        let d = doc_with_outputs(5);
        assert_eq!(prune_outputs(&d, &DocumentationOrder, MAX_OUTPUTS).unwrap(), d);
    }

    #[test]
    fn documentation_order_keeps_first_twenty() {
        let d = doc_with_outputs(25);
        let p = prune_outputs(&d, &DocumentationOrder, MAX_OUTPUTS).unwrap();
        let names: Vec<_> = p.outputs.iter().map(|o| o.name.clone()).collect();
        let expected: Vec<_> = (1..=20).map(|i| format!("o{i}")).collect();
        assert_eq!(names, expected);
    }

    #[test]
    fn highest_scored_output_survives() {
        let d = doc_with_outputs(21);
        // output #21 scores highest; #20 is the unique lowest
        let mut scores: Vec<f64> = vec![1.0; 21];
        scores[20] = 5.0;
        scores[19] = 0.0;
        let p = prune_outputs(&d, &Fixed(scores), MAX_OUTPUTS).unwrap();
        assert_eq!(p.outputs.len(), 20);
        assert!(p.outputs.iter().any(|o| o.name == "o21"));
        assert!(!p.outputs.iter().any(|o| o.name == "o20"));
        assert_eq!(p.outputs.last().unwrap().name, "o21");
    }

    #[test]
    fn ties_fall_back_to_documentation_order() {
        let d = doc_with_outputs(22);
        let p = prune_outputs(&d, &Fixed(vec![0.5; 22]), MAX_OUTPUTS).unwrap();
        assert_eq!(p.outputs.last().unwrap().name, "o20");
    }

    #[test]
    fn wrong_score_count_is_an_error() {
        let d = doc_with_outputs(22);
        assert!(prune_outputs(&d, &Fixed(vec![0.5; 3]), MAX_OUTPUTS).is_err());
    }
}
