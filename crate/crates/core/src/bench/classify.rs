use std::collections::HashMap;

use super::BenchError;
use crate::docmodel::{ApiDoc, Corpus, ParamRef, ParamSpec};
use crate::graph::{ApiGraph, EdgeType, LabelRow};
use crate::providers::{param_text, prompts, similarity, ChatModel, Embedder, ProviderError};

/// Predicts the edge type between a source output and a target input.
pub trait EdgeClassifier: Send + Sync {
    fn classify(
        &self,
        source_doc: &ApiDoc,
        source: &ParamSpec,
        target_doc: &ApiDoc,
        target: &ParamSpec,
    ) -> Result<EdgeType, ProviderError>;

    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Resolves both parameters in `corpus` and classifies the pair.
pub fn classify_edge<C: EdgeClassifier + ?Sized>(
    classifier: &C,
    corpus: &Corpus,
    source: &ParamRef,
    target: &ParamRef,
) -> Result<EdgeType, BenchError> {
    let (sdoc, sp) = corpus
        .resolve_or_err(source)
        .map_err(|_| BenchError::UnknownParam(source.clone()))?;
    let (tdoc, tp) = corpus
        .resolve_or_err(target)
        .map_err(|_| BenchError::UnknownParam(target.clone()))?;
    Ok(classifier.classify(sdoc, sp, tdoc, tp)?)
}

/// Returns stored labels; unlabeled pairs are non.
#[derive(Debug, Clone, Default)]
pub struct GoldOracle {
    labels: HashMap<(ParamRef, ParamRef), EdgeType>,
}

impl GoldOracle {
    pub fn from_labels(rows: &[LabelRow]) -> Self {
        GoldOracle {
            labels: rows
                .iter()
                .map(|r| ((r.source.clone(), r.target.clone()), r.edge_type()))
                .collect(),
        }
    }

    pub fn from_graph(graph: &ApiGraph) -> Self {
        GoldOracle {
            labels: graph
                .edges()
                .map(|e| ((e.source.clone(), e.target.clone()), e.etype))
                .collect(),
        }
    }
}

impl EdgeClassifier for GoldOracle {
    fn classify(&self, sdoc: &ApiDoc, s: &ParamSpec, tdoc: &ApiDoc, t: &ParamSpec) -> Result<EdgeType, ProviderError> {
        let key = (sdoc.output_ref(&s.name), tdoc.input_ref(&t.name));
        Ok(self.labels.get(&key).copied().unwrap_or(EdgeType::Non))
    }
}

/// Similarity thresholds on the parameters' `"name: description"` texts:
/// strong at 0.8 or above, weak at 0.5 or above, otherwise non.
pub struct HeuristicClassifier<E> {
    embedder: E,
    pub strong_threshold: f64,
    pub weak_threshold: f64,
}

impl<E: Embedder> HeuristicClassifier<E> {
    pub fn new(embedder: E) -> Self {
        HeuristicClassifier {
            embedder,
            strong_threshold: 0.8,
            weak_threshold: 0.5,
        }
    }
}

impl<E: Embedder> EdgeClassifier for HeuristicClassifier<E> {
    fn classify(&self, _: &ApiDoc, s: &ParamSpec, _: &ApiDoc, t: &ParamSpec) -> Result<EdgeType, ProviderError> {
        let a = self.embedder.embed(&param_text(s))?;
        let b = self.embedder.embed(&param_text(t))?;
        let sim = similarity(&a, &b);
        Ok(if sim >= self.strong_threshold {
            EdgeType::Strong
        } else if sim >= self.weak_threshold {
            EdgeType::Weak
        } else {
            EdgeType::Non
        })
    }

    fn concurrent_safe(&self) -> bool {
        self.embedder.concurrent_safe()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantClassifier(pub EdgeType);

impl EdgeClassifier for ConstantClassifier {
    fn classify(&self, _: &ApiDoc, _: &ParamSpec, _: &ApiDoc, _: &ParamSpec) -> Result<EdgeType, ProviderError> {
        Ok(self.0)
    }
}

/// Chat model with the edge classification prompt. An unparseable reply is
/// retried once.
pub struct ChatEdgeClassifier<C> {
    model: C,
}

impl<C: ChatModel> ChatEdgeClassifier<C> {
    pub fn new(model: C) -> Self {
        ChatEdgeClassifier { model }
    }
}

impl<C: ChatModel> EdgeClassifier for ChatEdgeClassifier<C> {
    fn classify(&self, sdoc: &ApiDoc, s: &ParamSpec, tdoc: &ApiDoc, t: &ParamSpec) -> Result<EdgeType, ProviderError> {
        let prompt = prompts::edge_classification_prompt(sdoc, &s.name, tdoc, &t.name);
        let mut attempt = 0;
        loop {
            let reply = self.model.complete(&prompt)?;
            match prompts::parse_edge_reply(&reply) {
                Ok(t) => return Ok(t),
                Err(e @ ProviderError::Malformed { .. }) if attempt == 0 => {
                    log::warn!("retrying edge classification after bad reply: {e}");
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn concurrent_safe(&self) -> bool {
        self.model.concurrent_safe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::PrimitiveType;
    use crate::providers::HashedEmbedder;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn doc(id: &str, out: ParamSpec, inp: ParamSpec) -> ApiDoc {
        ApiDoc {
            api_id: id.into(),
            domain: "d".into(),
            description: String::new(),
            inputs: vec![inp],
            outputs: vec![out],
        }
    }

    #[test]
    fn heuristic_extremes() {
        let h = HeuristicClassifier::new(HashedEmbedder::default());
        let a = doc(
            "A",
            ParamSpec::output("token", PrimitiveType::Str, "session token"),
            ParamSpec::input("q", PrimitiveType::Str, "x"),
        );
        let b = doc(
            "B",
            ParamSpec::output("z", PrimitiveType::Str, "z"),
            ParamSpec::input("token", PrimitiveType::Str, "session token"),
        );
        assert_eq!(
            h.classify(&a, &a.outputs[0], &b, &b.inputs[0]).unwrap(),
            EdgeType::Strong
        );
        let c = doc(
            "C",
            ParamSpec::output("z", PrimitiveType::Str, "z"),
            ParamSpec::input("zip", PrimitiveType::Str, "postal code"),
        );
        assert_eq!(h.classify(&a, &a.outputs[0], &c, &c.inputs[0]).unwrap(), EdgeType::Non);
    }

    struct Flaky {
        calls: AtomicUsize,
        replies: Vec<&'static str>,
    }
    impl ChatModel for Flaky {
        fn complete(&self, _: &str) -> Result<String, ProviderError> {
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.replies[i.min(self.replies.len() - 1)].to_string())
        }
    }

    #[test]
    fn chat_retry_once() {
        let a = doc(
            "A",
            ParamSpec::output("o", PrimitiveType::Str, "x"),
            ParamSpec::input("i", PrimitiveType::Str, "x"),
        );
        let ok_second = ChatEdgeClassifier::new(Flaky {
            calls: AtomicUsize::new(0),
            replies: vec!["hmm", r#"{"edge_type": "strong-edge"}"#],
        });
        assert_eq!(
            ok_second.classify(&a, &a.outputs[0], &a, &a.inputs[0]).unwrap(),
            EdgeType::Strong
        );
        let never = ChatEdgeClassifier::new(Flaky {
            calls: AtomicUsize::new(0),
            replies: vec!["hmm", "still no"],
        });
        match never.classify(&a, &a.outputs[0], &a, &a.inputs[0]) {
            Err(ProviderError::Malformed { raw, .. }) => assert_eq!(raw, "still no"),
            other => panic!("{other:?}"),
        }
        assert_eq!(never.model.calls.load(Ordering::SeqCst), 2);
    }
}
