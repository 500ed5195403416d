//! Provider abstractions for embeddings, relevance scoring and chat models.
//!
//! Every trait has an offline deterministic implementation
//! ([`HashedEmbedder`], [`JaccardScorer`]) so the whole pipeline runs without
//! network access. HTTP-backed implementations live in [`http`].

mod cache;
mod gate;
pub mod http;
pub mod prompts;
mod text;

use thiserror::Error;

use crate::docmodel::{ApiDoc, ParamSpec};

pub use cache::CachedScorer;
pub use gate::Gated;
pub use text::{fnv1a64, tokenize, HashedEmbedder, JaccardScorer};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider reply: {reason}; raw reply: {raw:?}")]
    Malformed { reason: String, raw: String },
    #[error("score {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("{0}")]
    Other(String),
}

impl ProviderError {
    pub fn malformed(reason: impl Into<String>, raw: impl Into<String>) -> Self {
        ProviderError::Malformed {
            reason: reason.into(),
            raw: raw.into(),
        }
    }
}

/// Text embedding provider.
///
/// Implementations must be deterministic for identical text within a run.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, ProviderError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }

    /// Whether callers may issue concurrent `embed` calls.
    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Scores how relevant a source output parameter is to a target input
/// parameter, given both APIs' full documentation. Scores lie in `[0, 1]`.
pub trait RelevanceScorer: Send + Sync {
    fn score(
        &self,
        source_doc: &ApiDoc,
        source_param: &ParamSpec,
        target_doc: &ApiDoc,
        target_param: &ParamSpec,
    ) -> Result<f64, ProviderError>;

    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// A single-turn text generation model.
pub trait ChatModel: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;

    fn concurrent_safe(&self) -> bool {
        true
    }
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        (**self).embed(text)
    }
    fn concurrent_safe(&self) -> bool {
        (**self).concurrent_safe()
    }
}

impl<T: Embedder + ?Sized> Embedder for Box<T> {
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        (**self).embed(text)
    }
    fn concurrent_safe(&self) -> bool {
        (**self).concurrent_safe()
    }
}

impl<T: RelevanceScorer + ?Sized> RelevanceScorer for Box<T> {
    fn score(
        &self,
        source_doc: &ApiDoc,
        source_param: &ParamSpec,
        target_doc: &ApiDoc,
        target_param: &ParamSpec,
    ) -> Result<f64, ProviderError> {
        (**self).score(source_doc, source_param, target_doc, target_param)
    }
    fn concurrent_safe(&self) -> bool {
        (**self).concurrent_safe()
    }
}

impl<T: ChatModel + ?Sized> ChatModel for Box<T> {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        (**self).complete(prompt)
    }
    fn concurrent_safe(&self) -> bool {
        (**self).concurrent_safe()
    }
}

/// Text used to embed a parameter: `"name: description"`.
pub fn param_text(param: &ParamSpec) -> String {
    format!("{}: {}", param.name, param.description)
}

/// Cosine similarity; a zero vector on either side yields 0.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Cosine similarity clamped into `[0, 1]`.
pub fn similarity(a: &[f32], b: &[f32]) -> f64 {
    cosine(a, b).clamp(0.0, 1.0)
}

/// Scorer that consults `primary` and falls back to `fallback` when the
/// primary provider fails. Out-of-range primary scores are not masked.
pub struct FallbackScorer<P, F> {
    pub primary: P,
    pub fallback: F,
}

impl<P: RelevanceScorer, F: RelevanceScorer> RelevanceScorer for FallbackScorer<P, F> {
    fn score(
        &self,
        source_doc: &ApiDoc,
        source_param: &ParamSpec,
        target_doc: &ApiDoc,
        target_param: &ParamSpec,
    ) -> Result<f64, ProviderError> {
        match self.primary.score(source_doc, source_param, target_doc, target_param) {
            Ok(s) => Ok(s),
            Err(ProviderError::OutOfRange(s)) => Err(ProviderError::OutOfRange(s)),
            Err(e) => {
                log::warn!("relevance provider failed, using fallback: {e}");
                self.fallback.score(source_doc, source_param, target_doc, target_param)
            }
        }
    }

    fn concurrent_safe(&self) -> bool {
        self.primary.concurrent_safe() && self.fallback.concurrent_safe()
    }
}

/// Relevance scorer backed by a chat model and the context-filtering prompt.
pub struct ModelRelevanceScorer<C> {
    model: C,
}

impl<C: ChatModel> ModelRelevanceScorer<C> {
    pub fn new(model: C) -> Self {
        Self { model }
    }
}

impl<C: ChatModel> RelevanceScorer for ModelRelevanceScorer<C> {
    fn score(
        &self,
        source_doc: &ApiDoc,
        source_param: &ParamSpec,
        target_doc: &ApiDoc,
        target_param: &ParamSpec,
    ) -> Result<f64, ProviderError> {
        let prompt = prompts::relevance_prompt(source_doc, source_param, target_doc, target_param);
        let reply = self.model.complete(&prompt)?;
        prompts::parse_relevance_reply(&reply)
    }

    fn concurrent_safe(&self) -> bool {
        self.model.concurrent_safe()
    }
}
