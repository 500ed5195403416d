#![allow(dead_code)]

use std::path::PathBuf;

use apigraph_core::docmodel::{load_corpus_dir, ParseOptions};
use apigraph_core::filter::DomainPolicy;
use apigraph_core::graph::{build_graph, read_labels, LabelRow};
use apigraph_core::retrieval::{read_instances, RetrievalInstance};
use apigraph_core::{ApiGraph, Corpus};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn corpus() -> Corpus {
    load_corpus_dir(&fixture_dir().join("corpus"), &ParseOptions::default())
        .expect("fixture corpus loads")
        .corpus
}

pub fn labels() -> Vec<LabelRow> {
    let text = std::fs::read_to_string(fixture_dir().join("labels.json")).unwrap();
    read_labels(&text).expect("fixture labels parse")
}

pub fn gold_graph(corpus: &Corpus) -> ApiGraph {
    build_graph(corpus, &labels()).expect("fixture graph builds")
}

pub fn instances(corpus: &Corpus) -> Vec<RetrievalInstance> {
    let text = std::fs::read_to_string(fixture_dir().join("instances.json")).unwrap();
    read_instances(&text, corpus).expect("fixture instances parse")
}

pub fn policy() -> DomainPolicy {
    let text = std::fs::read_to_string(fixture_dir().join("domain_policy.json")).unwrap();
    DomainPolicy::from_json(&text).unwrap()
}
