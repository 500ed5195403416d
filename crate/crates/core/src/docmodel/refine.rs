use super::{ApiDoc, Corpus, DocError, ParamRef};
use crate::providers::{prompts, ChatModel};

/// How missing parameter descriptions are produced.
#[derive(Clone, Copy, Default)]
pub struct Refiner<'a> {
    /// Text generation model queried with the refinement prompt.
    pub model: Option<&'a dyn ChatModel>,
    /// Use the deterministic `"<api_id>: <direction> <param>"` text when no
    /// model is configured or the model call fails.
    pub fallback: bool,
}

impl<'a> Refiner<'a> {
    pub fn fallback_only() -> Self {
        Self {
            model: None,
            fallback: true,
        }
    }

    pub fn with_model(model: &'a dyn ChatModel, fallback: bool) -> Self {
        Self {
            model: Some(model),
            fallback,
        }
    }
}

fn fallback_text(param: &ParamRef) -> String {
    format!("{}: {} {}", param.api_id, param.direction, param.param_name)
}

/// Returns the parameter's description, generating and storing one if it is
/// missing. Existing descriptions are returned unchanged.
pub fn refine_description(doc: &mut ApiDoc, param: &ParamRef, refiner: &Refiner<'_>) -> Result<String, DocError> {
    if param.api_id != doc.api_id {
        return Err(DocError::UnknownParam(param.clone()));
    }
    let existing = doc
        .param(param.direction, &param.param_name)
        .ok_or_else(|| DocError::UnknownParam(param.clone()))?
        .description
        .clone();
    if !existing.trim().is_empty() {
        return Ok(existing);
    }

    let text = match refiner.model {
        Some(model) => match model.complete(&prompts::refine_prompt(doc, &param.param_name)) {
            Ok(reply) => {
                let reply = reply.trim().to_string();
                if reply.is_empty() {
                    return Err(DocError::EmptyDescription(param.clone()));
                }
                reply
            }
            Err(e) if refiner.fallback => {
                log::warn!("description model failed for {param}, using fallback: {e}");
                fallback_text(param)
            }
            Err(e) => {
                return Err(DocError::Provider {
                    param: param.clone(),
                    source: e,
                })
            }
        },
        None if refiner.fallback => fallback_text(param),
        None => {
            return Err(DocError::Provider {
                param: param.clone(),
                source: crate::providers::ProviderError::Other("no description provider configured".into()),
            })
        }
    };

    if let Some(spec) = doc.param_mut(param.direction, &param.param_name) {
        spec.description = text.clone();
    }
    Ok(text)
}

/// Fills every empty description in the corpus. Returns how many were
/// generated.
pub fn refine_missing(corpus: &mut Corpus, refiner: &Refiner<'_>) -> Result<usize, DocError> {
    let mut targets = Vec::new();
    for doc in corpus.apis() {
        for p in doc.inputs.iter().chain(&doc.outputs) {
            if p.description.trim().is_empty() {
                targets.push(ParamRef::new(&doc.api_id, p.direction, &p.name));
            }
        }
    }
    for r in &targets {
        let doc = corpus
            .get_mut(&r.api_id)
            .ok_or_else(|| DocError::UnknownParam(r.clone()))?;
        refine_description(doc, r, refiner)?;
    }
    Ok(targets.len())
}
