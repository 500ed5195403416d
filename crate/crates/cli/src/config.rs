use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use apigraph_core::filter::{DEFAULT_CONTEXT_THRESHOLD, DEFAULT_SEMANTIC_THRESHOLD};
use apigraph_core::EdgeMask;
use serde::Deserialize;

/// Settings read from `--config`. Relative paths resolve against the
/// config file's directory; command-line flags override file values.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub mask: Option<String>,
    pub jobs: Option<usize>,
    pub provider: ProviderConfig,
    pub filter: FilterSection,
    pub bench: BenchSection,
    pub retrieval: RetrievalSection,
    pub subsets: SubsetSection,
    pub annotation: AnnotationSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    /// Hashed embeddings and token-overlap relevance; no network.
    #[default]
    Offline,
    /// OpenAI-compatible HTTP endpoints.
    Http,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Overrides `APIGRAPH_API_BASE`.
    pub base_url: Option<String>,
    pub chat_model: String,
    pub embedding_model: String,
    /// Dimension of the offline hashed embedding.
    pub embedding_dim: Option<usize>,
    /// Serialize all calls to remote providers.
    pub serial: bool,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Offline,
            base_url: None,
            chat_model: "gpt-4o-mini".into(),
            embedding_model: "text-embedding-3-small".into(),
            embedding_dim: None,
            serial: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub semantic_threshold: f64,
    pub context_threshold: f64,
    pub include_self: bool,
    pub multi_provider: bool,
    pub domain_policy: Option<PathBuf>,
    /// On-disk relevance score cache.
    pub relevance_cache: Option<PathBuf>,
}

impl Default for FilterSection {
    fn default() -> Self {
        FilterSection {
            semantic_threshold: DEFAULT_SEMANTIC_THRESHOLD,
            context_threshold: DEFAULT_CONTEXT_THRESHOLD,
            include_self: false,
            multi_provider: false,
            domain_policy: None,
            relevance_cache: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub labels: Option<PathBuf>,
    pub heldout_domains: Vec<String>,
    pub val_per_class: usize,
    pub test_per_class: usize,
    pub classifier: Option<String>,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            labels: None,
            heldout_domains: Vec::new(),
            val_per_class: 100,
            test_per_class: 100,
            classifier: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub instances: Option<PathBuf>,
    pub selector: Option<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SubsetSection {
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub runs: usize,
    pub pool_size: Option<usize>,
    pub min_valid: usize,
    pub max_tries: usize,
    pub generator: Option<String>,
    /// Similarity threshold for the documentation-only generator.
    pub heuristic_threshold: f64,
}

impl Default for SubsetSection {
    fn default() -> Self {
        SubsetSection {
            kind: None,
            n: None,
            runs: 5,
            pool_size: None,
            min_valid: 5,
            max_tries: 200,
            generator: None,
            heuristic_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationSection {
    pub annotators: [String; 2],
    pub calibration: usize,
    /// Filter report whose survivors form the queue.
    pub queue: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub addr: String,
}

impl Default for AnnotationSection {
    fn default() -> Self {
        let d = apigraph_annotate::AnnotationConfig::default();
        AnnotationSection {
            annotators: d.annotators,
            calibration: d.calibration,
            queue: None,
            log: None,
            addr: "127.0.0.1:8080".into(),
        }
    }
}

fn in_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        bail!("{name} must lie in [0, 1], got {v}");
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.out);
        fix(&mut self.filter.domain_policy);
        fix(&mut self.filter.relevance_cache);
        fix(&mut self.bench.labels);
        fix(&mut self.retrieval.instances);
        fix(&mut self.annotation.queue);
        fix(&mut self.annotation.log);
    }

    /// Rejects out-of-range settings before any work starts.
    pub fn validate(&self) -> Result<()> {
        in_unit("filter.semantic_threshold", self.filter.semantic_threshold)?;
        in_unit("filter.context_threshold", self.filter.context_threshold)?;
        in_unit("subsets.heuristic_threshold", self.subsets.heuristic_threshold)?;
        if self.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        self.edge_mask()?;
        if !self.bench.heldout_domains.is_empty() && self.bench.heldout_domains.len() != 2 {
            bail!(
                "bench.heldout_domains must name exactly 2 domains, got {}",
                self.bench.heldout_domains.len()
            );
        }
        if let Some(n) = self.subsets.n {
            if !(3..=5).contains(&n) {
                bail!("subsets.n must be 3, 4 or 5, got {n}");
            }
        }
        if let Some(kind) = &self.subsets.kind {
            kind.parse::<apigraph_core::subsets::PatternKind>()
                .map_err(anyhow::Error::msg)?;
        }
        if self.subsets.runs == 0 {
            bail!("subsets.runs must be at least 1");
        }
        if self.provider.embedding_dim == Some(0) {
            bail!("provider.embedding_dim must be at least 1");
        }
        apigraph_annotate::AnnotationConfig {
            annotators: self.annotation.annotators.clone(),
            calibration: self.annotation.calibration,
        }
        .validate()?;
        Ok(())
    }

    pub fn edge_mask(&self) -> Result<EdgeMask> {
        match &self.mask {
            None => Ok(EdgeMask::default()),
            Some(m) => m.parse().map_err(|e| anyhow::anyhow!("invalid mask {m:?}: {e}")),
        }
    }
}
