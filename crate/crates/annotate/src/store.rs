use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use apigraph_core::graph::{Compatibility, LabelRow, Naturalness};
use apigraph_core::providers::fnv1a64;
use apigraph_core::{ApiDoc, Corpus, ParamRef};
use serde::{Deserialize, Serialize};

use crate::events::{Event, EventLog};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown annotator {0:?}")]
    UnknownAnnotator(String),
    #[error("unknown pair #{0}")]
    UnknownPair(usize),
    #[error("pair #{0} is already resolved")]
    AlreadyResolved(usize),
    #[error("pair #{pair_id} is {status}, not disputed")]
    NotDisputed { pair_id: usize, status: Status },
    #[error("cannot export: {}", incomplete_message(.disputed, .unlabeled))]
    Incomplete {
        disputed: Vec<String>,
        unlabeled: Vec<String>,
    },
    #[error("invalid queue: {0}")]
    Queue(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("event log line {line}: {reason}")]
    Replay { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn incomplete_message(disputed: &[String], unlabeled: &[String]) -> String {
    let mut parts = Vec::new();
    if !disputed.is_empty() {
        parts.push(format!(
            "{} unresolved disputed pair(s): {}",
            disputed.len(),
            disputed.join("; ")
        ));
    }
    if !unlabeled.is_empty() {
        parts.push(format!("{} pair(s) not labeled by both annotators", unlabeled.len()));
    }
    parts.join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationConfig {
    /// Exactly two annotator ids.
    pub annotators: [String; 2],
    /// Leading queue pairs labeled by both annotators for calibration.
    #[serde(default = "default_calibration")]
    pub calibration: usize,
}

fn default_calibration() -> usize {
    100
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        AnnotationConfig {
            annotators: ["annotator-1".into(), "annotator-2".into()],
            calibration: default_calibration(),
        }
    }
}

impl AnnotationConfig {
    pub fn validate(&self) -> Result<(), StoreError> {
        let [a, b] = &self.annotators;
        if a.trim().is_empty() || b.trim().is_empty() {
            return Err(StoreError::Config("annotator ids must be non-empty".into()));
        }
        if a == b {
            return Err(StoreError::Config(format!("annotator ids must differ, both are {a:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Unassigned,
    InProgress,
    Labeled,
    Disputed,
    Resolved,
}

impl Status {
    pub const ALL: [Status; 5] = [
        Status::Unassigned,
        Status::InProgress,
        Status::Labeled,
        Status::Disputed,
        Status::Resolved,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Unassigned => "unassigned",
            Status::InProgress => "in_progress",
            Status::Labeled => "labeled",
            Status::Disputed => "disputed",
            Status::Resolved => "resolved",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSubmission {
    pub pair_id: usize,
    pub annotator: String,
    pub compatibility: Compatibility,
    pub naturalness: Naturalness,
    /// Milliseconds since the Unix epoch; filled in by the store when zero.
    #[serde(default)]
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub pair_id: usize,
    pub compatibility: Compatibility,
    pub naturalness: Naturalness,
    #[serde(default)]
    pub note: String,
    #[serde(default)]
    pub timestamp: u64,
}

/// One queued pair together with both APIs' documentation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationTask {
    pub pair_id: usize,
    pub source: ParamRef,
    pub target: ParamRef,
    pub calibration: bool,
    pub status: Status,
    pub source_doc: ApiDoc,
    pub target_doc: ApiDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Disagreement {
    pub pair_id: usize,
    pub source: ParamRef,
    pub target: ParamRef,
    pub submissions: Vec<LabelSubmission>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Progress {
    pub pairs: usize,
    pub calibration: usize,
    /// Pairs each annotator has a current submission for.
    pub labeled_by: BTreeMap<String, usize>,
    pub statuses: BTreeMap<Status, usize>,
    /// Pairs that were ever disputed (open or resolved).
    pub disagreements: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PairEntry {
    source: ParamRef,
    target: ParamRef,
}

/// Queue, submissions and resolutions for one annotation campaign.
///
/// Pair ids are 1-based queue ordinals. When backed by a log file, every
/// accepted change is appended before it becomes visible.
pub struct AnnotationStore {
    config: AnnotationConfig,
    corpus: Corpus,
    pairs: Vec<PairEntry>,
    served: BTreeSet<(usize, usize)>,
    submissions: BTreeMap<(usize, usize), LabelSubmission>,
    resolutions: BTreeMap<usize, Resolution>,
    log: Option<EventLog>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl AnnotationStore {
    /// An in-memory store over `queue`, in assignment order.
    pub fn new(config: AnnotationConfig, corpus: Corpus, queue: Vec<(ParamRef, ParamRef)>) -> Result<Self, StoreError> {
        config.validate()?;
        let mut seen = HashMap::new();
        let mut pairs = Vec::with_capacity(queue.len());
        for (i, (source, target)) in queue.into_iter().enumerate() {
            for r in [&source, &target] {
                if corpus.resolve(r).is_none() {
                    return Err(StoreError::Queue(format!("pair #{}: {r} is not in the corpus", i + 1)));
                }
            }
            if let Some(first) = seen.insert((source.clone(), target.clone()), i + 1) {
                return Err(StoreError::Queue(format!(
                    "pair #{} repeats pair #{first} ({source} -> {target})",
                    i + 1
                )));
            }
            pairs.push(PairEntry { source, target });
        }
        Ok(AnnotationStore {
            config,
            corpus,
            pairs,
            served: BTreeSet::new(),
            submissions: BTreeMap::new(),
            resolutions: BTreeMap::new(),
            log: None,
        })
    }

    /// Like [`AnnotationStore::new`], then replays `path` (if it exists) and
    /// appends all further changes to it.
    pub fn open(
        config: AnnotationConfig,
        corpus: Corpus,
        queue: Vec<(ParamRef, ParamRef)>,
        path: &Path,
    ) -> Result<Self, StoreError> {
        let mut store = Self::new(config, corpus, queue)?;
        let (log, events) = EventLog::open(path)?;
        let fingerprint = store.fingerprint();
        let fresh = events.is_empty();
        for (line, event) in events {
            store
                .apply(&event, fingerprint.as_str())
                .map_err(|e| StoreError::Replay {
                    line,
                    reason: e.to_string(),
                })?;
        }
        store.log = Some(log);
        if fresh {
            store.append(&Event::Open {
                pairs: store.pairs.len(),
                fingerprint,
            })?;
        }
        Ok(store)
    }

    fn fingerprint(&self) -> String {
        let mut text = String::new();
        for p in &self.pairs {
            text.push_str(&format!("{}\t{}\n", p.source, p.target));
        }
        format!("{:016x}", fnv1a64(text.as_bytes()))
    }

    fn apply(&mut self, event: &Event, fingerprint: &str) -> Result<(), StoreError> {
        match event {
            Event::Open { pairs, fingerprint: f } => {
                if *pairs != self.pairs.len() || f != fingerprint {
                    return Err(StoreError::Queue(format!(
                        "log was written for a different queue ({pairs} pairs, fingerprint {f})"
                    )));
                }
            }
            Event::Served { pair_id, annotator } => {
                let a = self.annotator_index(annotator)?;
                self.check_pair(*pair_id)?;
                self.served.insert((*pair_id, a));
            }
            Event::Submitted(s) => {
                self.check_submission(s)?;
                let a = self.annotator_index(&s.annotator)?;
                self.submissions.insert((s.pair_id, a), s.clone());
            }
            Event::Resolved(r) => {
                self.check_resolution(r)?;
                self.resolutions.insert(r.pair_id, r.clone());
            }
        }
        Ok(())
    }

    fn append(&mut self, event: &Event) -> Result<(), StoreError> {
        if let Some(log) = &mut self.log {
            log.append(event)?;
        }
        Ok(())
    }

    pub fn config(&self) -> &AnnotationConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn annotator_index(&self, annotator: &str) -> Result<usize, StoreError> {
        self.config
            .annotators
            .iter()
            .position(|a| a == annotator)
            .ok_or_else(|| StoreError::UnknownAnnotator(annotator.to_string()))
    }

    fn check_pair(&self, pair_id: usize) -> Result<&PairEntry, StoreError> {
        if pair_id == 0 {
            return Err(StoreError::UnknownPair(pair_id));
        }
        self.pairs.get(pair_id - 1).ok_or(StoreError::UnknownPair(pair_id))
    }

    fn check_submission(&self, s: &LabelSubmission) -> Result<(), StoreError> {
        self.check_pair(s.pair_id)?;
        self.annotator_index(&s.annotator)?;
        if self.resolutions.contains_key(&s.pair_id) {
            return Err(StoreError::AlreadyResolved(s.pair_id));
        }
        Ok(())
    }

    fn check_resolution(&self, r: &Resolution) -> Result<(), StoreError> {
        let status = self.status(r.pair_id)?;
        if status == Status::Resolved {
            return Err(StoreError::AlreadyResolved(r.pair_id));
        }
        if status != Status::Disputed {
            return Err(StoreError::NotDisputed {
                pair_id: r.pair_id,
                status,
            });
        }
        Ok(())
    }

    fn labels_of(&self, pair_id: usize) -> [Option<&LabelSubmission>; 2] {
        [0, 1].map(|a| self.submissions.get(&(pair_id, a)))
    }

    pub fn status(&self, pair_id: usize) -> Result<Status, StoreError> {
        self.check_pair(pair_id)?;
        if self.resolutions.contains_key(&pair_id) {
            return Ok(Status::Resolved);
        }
        Ok(match self.labels_of(pair_id) {
            [Some(a), Some(b)] => {
                if (a.compatibility, a.naturalness) == (b.compatibility, b.naturalness) {
                    Status::Labeled
                } else {
                    Status::Disputed
                }
            }
            [None, None] if !self.served.iter().any(|(p, _)| *p == pair_id) => Status::Unassigned,
            _ => Status::InProgress,
        })
    }

    pub fn is_calibration(&self, pair_id: usize) -> bool {
        pair_id >= 1 && pair_id <= self.config.calibration
    }

    fn task(&self, pair_id: usize) -> Result<AnnotationTask, StoreError> {
        let entry = self.check_pair(pair_id)?;
        let doc = |r: &ParamRef| {
            self.corpus
                .get(&r.api_id)
                .cloned()
                .ok_or_else(|| StoreError::Queue(format!("{r} is not in the corpus")))
        };
        Ok(AnnotationTask {
            pair_id,
            source: entry.source.clone(),
            target: entry.target.clone(),
            calibration: self.is_calibration(pair_id),
            status: self.status(pair_id)?,
            source_doc: doc(&entry.source)?,
            target_doc: doc(&entry.target)?,
        })
    }

    /// The lowest-ordinal unresolved pair `annotator` has not labeled yet.
    /// Both annotators see every pair, so the calibration batch at the head
    /// of the queue is always served first.
    pub fn assign_next(&mut self, annotator: &str) -> Result<Option<AnnotationTask>, StoreError> {
        let a = self.annotator_index(annotator)?;
        let next = (1..=self.pairs.len())
            .find(|&p| !self.submissions.contains_key(&(p, a)) && !self.resolutions.contains_key(&p));
        let Some(pair_id) = next else {
            return Ok(None);
        };
        if !self.served.contains(&(pair_id, a)) {
            self.append(&Event::Served {
                pair_id,
                annotator: annotator.to_string(),
            })?;
            self.served.insert((pair_id, a));
        }
        self.task(pair_id).map(Some)
    }

    /// Records (or supersedes) one annotator's label and returns the pair's
    /// new status.
    pub fn submit_label(&mut self, mut submission: LabelSubmission) -> Result<Status, StoreError> {
        self.check_submission(&submission)?;
        if submission.timestamp == 0 {
            submission.timestamp = now_ms();
        }
        let a = self.annotator_index(&submission.annotator)?;
        self.append(&Event::Submitted(submission.clone()))?;
        let pair_id = submission.pair_id;
        self.submissions.insert((pair_id, a), submission);
        self.status(pair_id)
    }

    pub fn disagreements(&self) -> Vec<Disagreement> {
        (1..=self.pairs.len())
            .filter(|&p| matches!(self.status(p), Ok(Status::Disputed)))
            .map(|p| {
                let entry = &self.pairs[p - 1];
                Disagreement {
                    pair_id: p,
                    source: entry.source.clone(),
                    target: entry.target.clone(),
                    submissions: self.labels_of(p).into_iter().flatten().cloned().collect(),
                }
            })
            .collect()
    }

    pub fn resolve(&mut self, mut resolution: Resolution) -> Result<Status, StoreError> {
        self.check_resolution(&resolution)?;
        if resolution.timestamp == 0 {
            resolution.timestamp = now_ms();
        }
        self.append(&Event::Resolved(resolution.clone()))?;
        let pair_id = resolution.pair_id;
        self.resolutions.insert(pair_id, resolution);
        self.status(pair_id)
    }

    /// One final label per pair in queue order: the agreed label or the
    /// resolution. Fails while any pair is disputed or not yet labeled by
    /// both annotators.
    pub fn export_labels(&self) -> Result<Vec<LabelRow>, StoreError> {
        let mut rows = Vec::with_capacity(self.pairs.len());
        let mut disputed = Vec::new();
        let mut unlabeled = Vec::new();
        for (i, entry) in self.pairs.iter().enumerate() {
            let p = i + 1;
            let name = || format!("#{p} {} -> {}", entry.source, entry.target);
            let label = match self.status(p)? {
                Status::Resolved => {
                    let r = &self.resolutions[&p];
                    Some((r.compatibility, r.naturalness))
                }
                Status::Labeled => {
                    let s = self.labels_of(p)[0].expect("labeled pairs have both submissions");
                    Some((s.compatibility, s.naturalness))
                }
                Status::Disputed => {
                    disputed.push(name());
                    None
                }
                Status::Unassigned | Status::InProgress => {
                    unlabeled.push(name());
                    None
                }
            };
            if let Some((c, n)) = label {
                let mut row = LabelRow::criteria(entry.source.clone(), entry.target.clone(), c, n);
                row.calibration = self.is_calibration(p);
                rows.push(row);
            }
        }
        if !disputed.is_empty() || !unlabeled.is_empty() {
            return Err(StoreError::Incomplete { disputed, unlabeled });
        }
        Ok(rows)
    }

    pub fn progress(&self) -> Progress {
        let mut statuses: BTreeMap<Status, usize> = Status::ALL.iter().map(|s| (*s, 0)).collect();
        for p in 1..=self.pairs.len() {
            if let Ok(s) = self.status(p) {
                *statuses.entry(s).or_default() += 1;
            }
        }
        let labeled_by = self
            .config
            .annotators
            .iter()
            .enumerate()
            .map(|(a, name)| (name.clone(), self.submissions.keys().filter(|(_, x)| *x == a).count()))
            .collect();
        Progress {
            pairs: self.pairs.len(),
            calibration: self.config.calibration.min(self.pairs.len()),
            labeled_by,
            disagreements: statuses[&Status::Disputed] + statuses[&Status::Resolved],
            statuses,
        }
    }
}
