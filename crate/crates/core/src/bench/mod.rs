//! Edge-type prediction benchmark: class-balanced splits with held-out
//! domains, classifiers and confusion-matrix evaluation.

mod classify;
mod eval;
mod split;

use std::collections::HashMap;

use thiserror::Error;

use crate::docmodel::{Corpus, ParamRef};
use crate::graph::{ApiGraph, EdgeType};
use crate::providers::ProviderError;

pub use classify::{
    classify_edge, ChatEdgeClassifier, ConstantClassifier, EdgeClassifier, GoldOracle, HeuristicClassifier,
};
pub use eval::{evaluate_classifier, ConfusionMatrix, EvalReport, Skip};
pub use split::{make_splits, SplitSpec, Splits};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("expected exactly 2 held-out domains, got {0}")]
    HeldoutCount(usize),
    #[error("not enough examples: {}", format_deficits(.0))]
    Insufficient(Vec<(EdgeType, usize)>),
    #[error("unknown api {0}")]
    UnknownApi(String),
    #[error("parameter {0} does not resolve")]
    UnknownParam(ParamRef),
    #[error("classifier failed: {0}")]
    Classifier(#[from] ProviderError),
    #[error("empty split")]
    EmptySplit,
}

fn format_deficits(d: &[(EdgeType, usize)]) -> String {
    d.iter()
        .map(|(t, n)| format!("{t} short by {n}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Domain lookup by api_id.
pub trait DomainOf {
    fn domain(&self, api_id: &str) -> Option<&str>;
}

impl DomainOf for Corpus {
    fn domain(&self, api_id: &str) -> Option<&str> {
        self.domain_of(api_id)
    }
}

impl DomainOf for ApiGraph {
    fn domain(&self, api_id: &str) -> Option<&str> {
        self.domain_of(api_id)
    }
}

impl DomainOf for HashMap<String, String> {
    fn domain(&self, api_id: &str) -> Option<&str> {
        self.get(api_id).map(String::as_str)
    }
}
