use std::sync::Mutex;

use super::{ChatModel, Embedder, ProviderError, RelevanceScorer};
use crate::docmodel::{ApiDoc, ParamSpec};

/// Serializes every call to the wrapped provider behind a mutex.
///
/// Use this for clients that are not safe for concurrent calls, such as a
/// rate-limited HTTP model.
pub struct Gated<P> {
    inner: Mutex<P>,
}

impl<P> Gated<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner: Mutex::new(inner),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, P> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl<P: Embedder> Embedder for Gated<P> {
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        self.lock().embed(text)
    }
}

impl<P: RelevanceScorer> RelevanceScorer for Gated<P> {
    fn score(
        &self,
        source_doc: &ApiDoc,
        source_param: &ParamSpec,
        target_doc: &ApiDoc,
        target_param: &ParamSpec,
    ) -> Result<f64, ProviderError> {
        self.lock().score(source_doc, source_param, target_doc, target_param)
    }
}

impl<P: ChatModel> ChatModel for Gated<P> {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        self.lock().complete(prompt)
    }
}
