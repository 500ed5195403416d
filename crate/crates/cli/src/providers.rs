use apigraph_core::providers::http::{Endpoint, HttpChatModel, HttpEmbedder};
use apigraph_core::providers::{
    ChatModel, Embedder, FallbackScorer, Gated, HashedEmbedder, JaccardScorer, ModelRelevanceScorer, RelevanceScorer,
};

use crate::config::{ProviderConfig, ProviderKind};

fn endpoint(cfg: &ProviderConfig) -> Endpoint {
    let mut ep = Endpoint::from_env();
    if let Some(base) = &cfg.base_url {
        let key = ep.api_key.take();
        ep = Endpoint::new(base.clone());
        ep.api_key = key;
    }
    ep
}

pub fn embedder(cfg: &ProviderConfig) -> Box<dyn Embedder> {
    match cfg.kind {
        ProviderKind::Offline => Box::new(cfg.embedding_dim.map(HashedEmbedder::new).unwrap_or_default()),
        ProviderKind::Http => {
            let e = HttpEmbedder::new(endpoint(cfg), cfg.embedding_model.clone());
            if cfg.serial {
                Box::new(Gated::new(e))
            } else {
                Box::new(e)
            }
        }
    }
}

/// The configured chat model, or `None` when running offline.
pub fn chat(cfg: &ProviderConfig) -> Option<Box<dyn ChatModel>> {
    match cfg.kind {
        ProviderKind::Offline => None,
        ProviderKind::Http => {
            let m = HttpChatModel::new(endpoint(cfg), cfg.chat_model.clone());
            Some(if cfg.serial {
                Box::new(Gated::new(m))
            } else {
                Box::new(m)
            })
        }
    }
}

/// Relevance scorer for the context stage. Model scores fall back to token
/// overlap when the model call fails.
pub fn scorer(cfg: &ProviderConfig) -> Box<dyn RelevanceScorer> {
    match chat(cfg) {
        None => Box::new(JaccardScorer),
        Some(model) => Box::new(FallbackScorer {
            primary: ModelRelevanceScorer::new(model),
            fallback: JaccardScorer,
        }),
    }
}
