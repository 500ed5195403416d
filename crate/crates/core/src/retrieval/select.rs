use super::{RankedList, RetrievalError, RetrievalInstance};
use crate::docmodel::{ApiDoc, Corpus};
use crate::providers::{prompts, ChatModel, ProviderError};

/// Shortlist length handed to the selector.
pub const SHORTLIST: usize = 5;

/// Chooses the prerequisite API from a shortlist. `Ok(None)` means the
/// selector judged that no API is needed.
pub trait Selector: Send + Sync {
    fn select(
        &self,
        instance: &RetrievalInstance,
        corpus: &Corpus,
        shortlist: &[&str],
    ) -> Result<Option<String>, ProviderError>;

    fn concurrent_safe(&self) -> bool {
        true
    }
}

/// Always picks the first-ranked API.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopRankSelector;

impl Selector for TopRankSelector {
    fn select(&self, _: &RetrievalInstance, _: &Corpus, shortlist: &[&str]) -> Result<Option<String>, ProviderError> {
        Ok(shortlist.first().map(|s| s.to_string()))
    }
}

/// Asks a chat model with the retrieval prompt.
pub struct ChatSelector<C> {
    model: C,
}

impl<C: ChatModel> ChatSelector<C> {
    pub fn new(model: C) -> Self {
        Self { model }
    }
}

impl<C: ChatModel> Selector for ChatSelector<C> {
    fn select(
        &self,
        instance: &RetrievalInstance,
        corpus: &Corpus,
        shortlist: &[&str],
    ) -> Result<Option<String>, ProviderError> {
        let target = corpus
            .get(&instance.target_api)
            .ok_or_else(|| ProviderError::Other(format!("unknown api {}", instance.target_api)))?;
        let docs: Vec<&ApiDoc> = shortlist.iter().filter_map(|id| corpus.get(id)).collect();
        let param = target
            .input(&instance.missing_param.param_name)
            .map(|p| format!("{}: {}", p.name, p.description))
            .unwrap_or_else(|| instance.missing_param.param_name.clone());
        let prompt = prompts::retrieval_prompt(&instance.query, target, &param, &docs);
        let reply = self.model.complete(&prompt)?;
        let chosen = prompts::parse_retrieval_reply(&reply)?;
        Ok(if chosen.is_empty() { None } else { Some(chosen) })
    }

    fn concurrent_safe(&self) -> bool {
        self.model.concurrent_safe()
    }
}

/// Runs the selector on the top [`SHORTLIST`] entries. A choice outside the
/// shortlist is an error.
pub fn final_select<S: Selector + ?Sized>(
    ranked: &RankedList,
    instance: &RetrievalInstance,
    corpus: &Corpus,
    selector: &S,
) -> Result<Option<String>, RetrievalError> {
    let shortlist = ranked.top(SHORTLIST);
    if shortlist.is_empty() {
        return Err(RetrievalError::EmptyShortlist);
    }
    let chosen = selector
        .select(instance, corpus, &shortlist)
        .map_err(RetrievalError::Selector)?;
    match chosen {
        Some(c) if !shortlist.contains(&c.as_str()) => Err(RetrievalError::OutsideShortlist {
            chosen: c,
            shortlist: shortlist.iter().map(|s| s.to_string()).collect(),
        }),
        other => Ok(other),
    }
}
