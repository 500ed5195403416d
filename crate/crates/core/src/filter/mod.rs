//! Candidate pair enumeration and the rule → semantic → context pipeline.

mod policy;

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::docmodel::{ApiDoc, Corpus, ParamRef, ParamSpec};
use crate::providers::{param_text, similarity, Embedder, ProviderError, RelevanceScorer};

pub use policy::DomainPolicy;

pub const DEFAULT_SEMANTIC_THRESHOLD: f64 = 0.5;
pub const DEFAULT_CONTEXT_THRESHOLD: f64 = 0.3;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("parameter {0} does not resolve")]
    Unresolved(ParamRef),
    #[error("embedding failed for {param}: {error}")]
    Embedding { param: ParamRef, error: ProviderError },
    #[error("relevance scoring failed for {from} -> {target}: {error}")]
    Relevance {
        from: ParamRef,
        target: ParamRef,
        error: ProviderError,
    },
    #[error("relevance score {score} for {from} -> {target} is outside [0, 1]")]
    OutOfRange {
        from: ParamRef,
        target: ParamRef,
        score: f64,
    },
    #[error("invalid threshold {0}")]
    Threshold(f64),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Rule,
    Semantic,
    Context,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Rule => "rule",
            Stage::Semantic => "semantic",
            Stage::Context => "context",
        })
    }
}

/// A directed output → input hypothesis with the evidence collected so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub source: ParamRef,
    pub target: ParamRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_dropped: Option<Stage>,
}

impl CandidatePair {
    pub fn new(source: ParamRef, target: ParamRef) -> Self {
        CandidatePair {
            source,
            target,
            similarity: None,
            relevance: None,
            stage_dropped: None,
        }
    }

    fn key(&self) -> (&ParamRef, &ParamRef) {
        (&self.source, &self.target)
    }
}

/// Result of one stage: retained pairs and pairs dropped by that stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageOutput {
    pub kept: Vec<CandidatePair>,
    pub dropped: Vec<CandidatePair>,
}

impl StageOutput {
    fn split(scored: Vec<(CandidatePair, bool)>, stage: Stage) -> Self {
        let mut out = StageOutput::default();
        for (mut p, keep) in scored {
            if keep {
                out.kept.push(p);
            } else {
                p.stage_dropped = Some(stage);
                out.dropped.push(p);
            }
        }
        out
    }
}

/// Every output of every API paired with every input of every API, in
/// corpus order. Same-API pairs are included only with `include_self`.
pub fn enumerate_pairs(corpus: &Corpus, include_self: bool) -> Vec<CandidatePair> {
    let mut pairs = Vec::with_capacity(expected_pair_count(corpus, include_self));
    for a in corpus.apis() {
        for b in corpus.apis() {
            if a.api_id == b.api_id && !include_self {
                continue;
            }
            for out in &a.outputs {
                for inp in &b.inputs {
                    pairs.push(CandidatePair::new(a.output_ref(&out.name), b.input_ref(&inp.name)));
                }
            }
        }
    }
    pairs
}

/// Closed-form count of [`enumerate_pairs`]: Σ |outputs(A)|·|inputs(B)| over
/// ordered API pairs.
pub fn expected_pair_count(corpus: &Corpus, include_self: bool) -> usize {
    let outs: usize = corpus.apis().iter().map(|a| a.outputs.len()).sum();
    let ins: usize = corpus.apis().iter().map(|a| a.inputs.len()).sum();
    let same: usize = corpus.apis().iter().map(|a| a.outputs.len() * a.inputs.len()).sum();
    if include_self {
        outs * ins
    } else {
        outs * ins - same
    }
}

fn resolve<'c>(corpus: &'c Corpus, r: &ParamRef) -> Result<(&'c ApiDoc, &'c ParamSpec), FilterError> {
    let doc = corpus
        .get(&r.api_id)
        .ok_or_else(|| FilterError::Unresolved(r.clone()))?;
    let spec = doc
        .param(r.direction, &r.param_name)
        .ok_or_else(|| FilterError::Unresolved(r.clone()))?;
    Ok((doc, spec))
}

/// Whether a pair passes the type-category rule and, when given, the
/// domain policy.
pub fn rule_check(corpus: &Corpus, pair: &CandidatePair, policy: Option<&DomainPolicy>) -> Result<bool, FilterError> {
    let (sdoc, sp) = resolve(corpus, &pair.source)?;
    let (tdoc, tp) = resolve(corpus, &pair.target)?;
    if let Some(policy) = policy {
        if !policy.allows(&sdoc.domain, &tdoc.domain) {
            return Ok(false);
        }
    }
    Ok(sp.ptype.category() == tp.ptype.category())
}

pub fn rule_filter(
    corpus: &Corpus,
    pairs: Vec<CandidatePair>,
    policy: Option<&DomainPolicy>,
) -> Result<StageOutput, FilterError> {
    let scored = pairs
        .into_par_iter()
        .map(|p| rule_check(corpus, &p, policy).map(|keep| (p, keep)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StageOutput::split(scored, Stage::Rule))
}

/// Embeds each distinct parameter once and keeps pairs whose similarity is
/// at least `threshold`. Every scored pair carries its similarity.
pub fn semantic_filter<E: Embedder + ?Sized>(
    corpus: &Corpus,
    pairs: Vec<CandidatePair>,
    embedder: &E,
    threshold: f64,
) -> Result<StageOutput, FilterError> {
    if threshold.is_nan() {
        return Err(FilterError::Threshold(threshold));
    }
    let mut params: Vec<ParamRef> = pairs
        .iter()
        .flat_map(|p| [p.source.clone(), p.target.clone()])
        .collect();
    params.sort();
    params.dedup();
    let texts = params
        .iter()
        .map(|r| resolve(corpus, r).map(|(_, spec)| param_text(spec)))
        .collect::<Result<Vec<_>, _>>()?;

    let embed_one = |(r, t): (&ParamRef, &String)| {
        embedder.embed(t).map_err(|error| FilterError::Embedding {
            param: r.clone(),
            error,
        })
    };
    let vectors: Vec<Vec<f32>> = if embedder.concurrent_safe() {
        params
            .par_iter()
            .zip(texts.par_iter())
            .map(embed_one)
            .collect::<Result<_, _>>()?
    } else {
        params
            .iter()
            .zip(texts.iter())
            .map(embed_one)
            .collect::<Result<_, _>>()?
    };
    let index: HashMap<&ParamRef, usize> = params.iter().enumerate().map(|(i, r)| (r, i)).collect();

    let scored: Vec<(CandidatePair, bool)> = pairs
        .into_par_iter()
        .map(|mut p| {
            let s = similarity(&vectors[index[&p.source]], &vectors[index[&p.target]]);
            p.similarity = Some(s);
            (p, s >= threshold)
        })
        .collect();
    Ok(StageOutput::split(scored, Stage::Semantic))
}

/// Scores each pair with both APIs' documentation and keeps pairs whose
/// relevance is at least `threshold`.
pub fn context_filter<S: RelevanceScorer + ?Sized>(
    corpus: &Corpus,
    pairs: Vec<CandidatePair>,
    scorer: &S,
    threshold: f64,
) -> Result<StageOutput, FilterError> {
    if threshold.is_nan() {
        return Err(FilterError::Threshold(threshold));
    }
    let score_one = |mut p: CandidatePair| -> Result<(CandidatePair, bool), FilterError> {
        let (sdoc, sp) = resolve(corpus, &p.source)?;
        let (tdoc, tp) = resolve(corpus, &p.target)?;
        let s = match scorer.score(sdoc, sp, tdoc, tp) {
            Ok(s) => s,
            Err(ProviderError::OutOfRange(score)) => {
                return Err(FilterError::OutOfRange {
                    from: p.source,
                    target: p.target,
                    score,
                })
            }
            Err(error) => {
                return Err(FilterError::Relevance {
                    from: p.source,
                    target: p.target,
                    error,
                })
            }
        };
        if !(0.0..=1.0).contains(&s) {
            return Err(FilterError::OutOfRange {
                from: p.source,
                target: p.target,
                score: s,
            });
        }
        p.relevance = Some(s);
        Ok((p, s >= threshold))
    };
    let scored = if scorer.concurrent_safe() {
        pairs.into_par_iter().map(score_one).collect::<Result<Vec<_>, _>>()?
    } else {
        pairs.into_iter().map(score_one).collect::<Result<Vec<_>, _>>()?
    };
    Ok(StageOutput::split(scored, Stage::Context))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub semantic_threshold: f64,
    pub context_threshold: f64,
    pub include_self: bool,
    /// Apply the domain policy; only meaningful for corpora that mix
    /// providers.
    pub multi_provider: bool,
    /// Worker cap; `None` uses the global pool.
    #[serde(default, skip_serializing)]
    pub jobs: Option<usize>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            semantic_threshold: DEFAULT_SEMANTIC_THRESHOLD,
            context_threshold: DEFAULT_CONTEXT_THRESHOLD,
            include_self: false,
            multi_provider: false,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageCounts {
    pub initial: usize,
    pub after_rule: usize,
    pub after_semantic: usize,
    pub after_context: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub config: FilterConfig,
    pub counts: StageCounts,
    /// Surviving pairs sorted by (source, target).
    pub survivors: Vec<CandidatePair>,
}

impl FilterReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn table(&self) -> String {
        let c = &self.counts;
        let rows = [
            ("initial", c.initial),
            ("after rule", c.after_rule),
            ("after semantic", c.after_semantic),
            ("after context", c.after_context),
        ];
        rows.iter().map(|(k, v)| format!("{k:<15}{v:>10}\n")).collect()
    }
}

fn sort_pairs(pairs: &mut [CandidatePair]) {
    pairs.par_sort_by(|a, b| a.key().cmp(&b.key()));
}

/// Runs rule → semantic → context over the whole corpus.
pub fn run_pipeline<E, S>(
    corpus: &Corpus,
    policy: Option<&DomainPolicy>,
    embedder: &E,
    scorer: &S,
    config: &FilterConfig,
) -> Result<FilterReport, FilterError>
where
    E: Embedder + ?Sized,
    S: RelevanceScorer + ?Sized,
{
    let run = || -> Result<FilterReport, FilterError> {
        let pairs = enumerate_pairs(corpus, config.include_self);
        let initial = pairs.len();
        let policy = if config.multi_provider { policy } else { None };
        let rule = rule_filter(corpus, pairs, policy)?;
        let after_rule = rule.kept.len();
        let semantic = semantic_filter(corpus, rule.kept, embedder, config.semantic_threshold)?;
        let after_semantic = semantic.kept.len();
        let context = context_filter(corpus, semantic.kept, scorer, config.context_threshold)?;
        let mut survivors = context.kept;
        sort_pairs(&mut survivors);
        Ok(FilterReport {
            config: config.clone(),
            counts: StageCounts {
                initial,
                after_rule,
                after_semantic,
                after_context: survivors.len(),
            },
            survivors,
        })
    };
    match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| FilterError::Pool(e.to_string()))?
            .install(run),
        None => run(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::PrimitiveType;
    use crate::providers::{HashedEmbedder, JaccardScorer};

    fn corpus() -> Corpus {
        let api = |id: &str, domain: &str, outs: &[(&str, PrimitiveType)], ins: &[(&str, PrimitiveType)]| ApiDoc {
            api_id: id.into(),
            domain: domain.into(),
            description: String::new(),
            inputs: ins
                .iter()
                .map(|(n, t)| ParamSpec::input(*n, *t, format!("the {n}")))
                .collect(),
            outputs: outs
                .iter()
                .map(|(n, t)| ParamSpec::output(*n, *t, format!("the {n}")))
                .collect(),
        };
        use PrimitiveType::*;
        Corpus::new(vec![
            api("A", "d1", &[("token", Str), ("ok", Bool)], &[("flag", Bool)]),
            api(
                "B",
                "d2",
                &[("x", Int), ("y", Float), ("token", Str)],
                &[("token", Str), ("amount", Float)],
            ),
        ])
        .unwrap()
    }

    struct Fixed(f64);
    impl RelevanceScorer for Fixed {
        fn score(&self, _: &ApiDoc, _: &ParamSpec, _: &ApiDoc, _: &ParamSpec) -> Result<f64, ProviderError> {
            Ok(self.0)
        }
    }

    #[test]
    fn enumeration_count() {
        let c = corpus();
        assert_eq!(enumerate_pairs(&c, false).len(), 2 * 2 + 3);
        assert_eq!(expected_pair_count(&c, false), 7);
        assert_eq!(enumerate_pairs(&c, true).len(), 5 * 3);
        let single = Corpus::new(vec![c.apis()[0].clone()]).unwrap();
        assert!(enumerate_pairs(&single, false).is_empty());
    }

    #[test]
    fn rule_stage() {
        let c = corpus();
        let pair = |s: (&str, &str), t: (&str, &str)| {
            CandidatePair::new(ParamRef::output(s.0, s.1), ParamRef::input(t.0, t.1))
        };
        let out = rule_filter(
            &c,
            vec![
                pair(("A", "token"), ("B", "amount")),
                pair(("A", "ok"), ("B", "token")),
                pair(("B", "x"), ("A", "flag")),
            ],
            None,
        )
        .unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.dropped.len(), 2);
        assert!(out.dropped.iter().all(|p| p.stage_dropped == Some(Stage::Rule)));

        let policy = DomainPolicy::new([("d1", "d2")]);
        let out = rule_filter(&c, vec![pair(("A", "token"), ("B", "amount"))], Some(&policy)).unwrap();
        assert!(out.kept.is_empty());
        let bad = rule_filter(&c, vec![pair(("A", "nope"), ("B", "amount"))], None);
        assert!(matches!(bad, Err(FilterError::Unresolved(_))));
    }

    #[test]
    fn semantic_identical_text_is_kept() {
        let c = corpus();
        let p = CandidatePair::new(ParamRef::output("A", "token"), ParamRef::input("B", "token"));
        let out = semantic_filter(&c, vec![p], &HashedEmbedder::default(), 0.5).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert!((out.kept[0].similarity.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn context_boundaries() {
        let c = corpus();
        let p = || {
            vec![CandidatePair::new(
                ParamRef::output("A", "token"),
                ParamRef::input("B", "token"),
            )]
        };
        assert_eq!(context_filter(&c, p(), &Fixed(0.3), 0.3).unwrap().kept.len(), 1);
        assert_eq!(context_filter(&c, p(), &Fixed(0.2), 0.3).unwrap().kept.len(), 0);
        assert_eq!(context_filter(&c, p(), &Fixed(0.0), 0.3).unwrap().kept.len(), 0);
        assert!(matches!(
            context_filter(&c, p(), &Fixed(1.5), 0.3),
            Err(FilterError::OutOfRange { .. })
        ));
    }

    #[test]
    fn pipeline_counts_and_impossible_threshold() {
        let c = corpus();
        let cfg = FilterConfig::default();
        let r = run_pipeline(&c, None, &HashedEmbedder::default(), &JaccardScorer, &cfg).unwrap();
        assert_eq!(r.counts.initial, 7);
        assert!(r.counts.initial >= r.counts.after_rule);
        assert!(r.counts.after_rule >= r.counts.after_semantic);
        assert!(r.counts.after_semantic >= r.counts.after_context);
        assert_eq!(r.survivors.len(), r.counts.after_context);

        let cfg = FilterConfig {
            semantic_threshold: 1.01,
            jobs: Some(2),
            ..FilterConfig::default()
        };
        let r = run_pipeline(&c, None, &HashedEmbedder::default(), &JaccardScorer, &cfg).unwrap();
        assert_eq!(r.counts.after_semantic, 0);

        let empty = Corpus::new(vec![]).unwrap();
        let r = run_pipeline(
            &empty,
            None,
            &HashedEmbedder::default(),
            &JaccardScorer,
            &FilterConfig::default(),
        )
        .unwrap();
        assert_eq!(r.counts, StageCounts::default());
    }
}
