use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    is_valid_subset, sample_pool, PatternKind, PatternSpec, PoolSpec, SubsetCandidate, SubsetError, SubsetGenerator,
};
use crate::graph::{ApiGraph, EdgeMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub seed: u64,
    pub pool: Vec<String>,
    pub emitted: usize,
    pub emitted_distinct: usize,
    pub valid_distinct: usize,
    pub precision: f64,
}

/// Precision over distinct canonical candidates. Candidates naming unknown
/// APIs or repeating an API count as invalid; an empty batch scores 0.
pub fn score_candidates(
    candidates: &[SubsetCandidate],
    graph: &ApiGraph,
    pattern: &PatternSpec,
    mask: EdgeMask,
) -> RunScore {
    let distinct: BTreeSet<SubsetCandidate> = candidates.iter().map(|c| c.canonical(pattern)).collect();
    let valid = distinct
        .iter()
        .filter(|c| matches!(is_valid_subset(graph, c, pattern, mask), Ok(true)))
        .count();
    RunScore {
        seed: 0,
        pool: Vec::new(),
        emitted: candidates.len(),
        emitted_distinct: distinct.len(),
        valid_distinct: valid,
        precision: if distinct.is_empty() {
            0.0
        } else {
            valid as f64 / distinct.len() as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub kind: PatternKind,
    pub n: usize,
    pub seed: u64,
    pub mask: EdgeMask,
    pub mean_precision: f64,
    pub runs: Vec<RunScore>,
}

/// Samples `runs` pools from the gold `graph`, asks the generator for
/// subsets on each and scores them against the same graph.
#[allow(clippy::too_many_arguments)]
pub fn run_pattern_eval<G: SubsetGenerator + ?Sized>(
    graph: &ApiGraph,
    generator: &G,
    pattern: &PatternSpec,
    runs: usize,
    seed: u64,
    mask: EdgeMask,
    pool_spec: &PoolSpec,
) -> Result<PatternReport, SubsetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..runs).map(|_| rng.random()).collect();
    let one = |&s: &u64| -> Result<RunScore, SubsetError> {
        let pool: Vec<String> = sample_pool(graph, pattern, s, mask, pool_spec)?.into_iter().collect();
        let cands = generator.generate(&pool, pattern, s).map_err(SubsetError::Generator)?;
        let mut score = score_candidates(&cands, graph, pattern, mask);
        score.seed = s;
        score.pool = pool;
        Ok(score)
    };
    let scores: Vec<RunScore> = if generator.concurrent_safe() {
        seeds.par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        seeds.iter().map(one).collect::<Result<_, _>>()?
    };
    let mean = if scores.is_empty() {
        0.0
    } else {
        scores.iter().map(|s| s.precision).sum::<f64>() / scores.len() as f64
    };
    Ok(PatternReport {
        kind: pattern.kind,
        n: pattern.n,
        seed,
        mask,
        mean_precision: mean,
        runs: scores,
    })
}

/// Precision (%) with one row per n and one column per pattern.
pub fn precision_table(reports: &[PatternReport]) -> String {
    let mut out = format!("{:<4}{:>10}{:>10}{:>10}\n", "n", "Chain", "Fork", "Collider");
    let ns: BTreeSet<usize> = reports.iter().map(|r| r.n).collect();
    for n in ns {
        out.push_str(&format!("{n:<4}"));
        for kind in PatternKind::ALL {
            match reports.iter().find(|r| r.n == n && r.kind == kind) {
                Some(r) => out.push_str(&format!("{:>10.1}", 100.0 * r.mean_precision)),
                None => out.push_str(&format!("{:>10}", "-")),
            }
        }
        out.push('\n');
    }
    out
}
