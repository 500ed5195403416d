use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{ProviderError, RelevanceScorer};
use crate::docmodel::{ApiDoc, ParamSpec};

/// On-disk relevance score cache keyed by pair identity.
///
/// Scores are loaded on construction and written back by [`flush`].
///
/// [`flush`]: CachedScorer::flush
pub struct CachedScorer<S> {
    inner: S,
    path: PathBuf,
    scores: Mutex<BTreeMap<String, f64>>,
}

impl<S: RelevanceScorer> CachedScorer<S> {
    pub fn open(inner: S, path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let scores = match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e),
        };
        Ok(Self {
            inner,
            path,
            scores: Mutex::new(scores),
        })
    }

    pub fn len(&self) -> usize {
        self.scores.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flush(&self) -> io::Result<()> {
        let scores = self.scores.lock().unwrap_or_else(|e| e.into_inner());
        let text = serde_json::to_string_pretty(&*scores).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let tmp = self.path.with_extension("tmp");
        fs::write(&tmp, text)?;
        fs::rename(tmp, &self.path)
    }

    fn key(source_doc: &ApiDoc, source: &ParamSpec, target_doc: &ApiDoc, target: &ParamSpec) -> String {
        format!(
            "{}|{}->{}|{}",
            source_doc.api_id, source.name, target_doc.api_id, target.name
        )
    }
}

impl<S: RelevanceScorer> RelevanceScorer for CachedScorer<S> {
    fn score(
        &self,
        source_doc: &ApiDoc,
        source_param: &ParamSpec,
        target_doc: &ApiDoc,
        target_param: &ParamSpec,
    ) -> Result<f64, ProviderError> {
        let key = Self::key(source_doc, source_param, target_doc, target_param);
        if let Some(s) = self.scores.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*s);
        }
        let s = self.inner.score(source_doc, source_param, target_doc, target_param)?;
        self.scores.lock().unwrap_or_else(|e| e.into_inner()).insert(key, s);
        Ok(s)
    }

    fn concurrent_safe(&self) -> bool {
        self.inner.concurrent_safe()
    }
}
