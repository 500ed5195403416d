//! Parameter-level API dependency graphs for tool agents.
//!
//! The crate covers the whole offline workflow:
//!
//! - [`docmodel`]: parse API documentation, normalize types, flatten nested
//!   output schemas into primitive parameters and prune them.
//! - [`filter`]: enumerate output→input parameter pairs and reduce them with
//!   rule-based, semantic and context-aware stages.
//! - [`graph`]: labeled parameter-level edges, API-level projection,
//!   connectivity statistics and the graph file format.
//! - [`bench`]: class-balanced splits and edge-type classifier evaluation.
//! - [`retrieval`]: prerequisite-API ranking, graph-aware re-ranking and
//!   rank metrics.
//! - [`subsets`]: chain/fork/collider patterns, subset validation, pool
//!   sampling and precision scoring.
//!
//! External models (embedding services, chat models) plug in through the
//! traits in [`providers`]; every stage also has a deterministic offline
//! default.

#![allow(clippy::result_large_err)]

pub mod bench;
pub mod docmodel;
pub mod filter;
pub mod graph;
pub mod providers;
pub mod retrieval;
pub mod subsets;

pub use docmodel::{ApiDoc, Corpus, Direction, ParamRef, ParamSpec, PrimitiveType};
pub use graph::{ApiGraph, EdgeMask, EdgeType};
