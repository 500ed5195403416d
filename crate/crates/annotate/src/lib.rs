//! Two-annotator labeling service for candidate parameter pairs.
//!
//! [`AnnotationStore`] holds the queue, per-annotator submissions and
//! resolutions, persisted as an append-only event log. [`http::router`]
//! exposes it over HTTP.

mod events;
pub mod http;
mod store;

pub use store::{
    AnnotationConfig, AnnotationStore, AnnotationTask, Disagreement, LabelSubmission, Progress, Resolution, Status,
    StoreError,
};
