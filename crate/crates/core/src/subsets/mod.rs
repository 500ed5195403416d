//! Chain, fork and collider API patterns: validation against a graph,
//! exhaustive enumeration, pool sampling and precision scoring.

mod eval;
mod generate;
mod pool;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ApiGraph, EdgeMask};

pub use eval::{precision_table, run_pattern_eval, score_candidates, PatternReport, RunScore};
pub use generate::{heuristic_adjacency, ChatSubsetGenerator, GraphWalkGenerator, SubsetGenerator, CANDIDATES_PER_RUN};
pub use pool::{sample_pool, PoolSpec};

/// Largest pool [`enumerate_valid`] accepts.
pub const MAX_ENUMERATION_POOL: usize = 30;

#[derive(Debug, Error)]
pub enum SubsetError {
    #[error("pattern size {0} is outside 3..=5")]
    Size(usize),
    #[error("unknown api {0}")]
    UnknownApi(String),
    #[error("candidate has {got} roles, pattern needs {want}")]
    RoleCount { got: usize, want: usize },
    #[error("candidate assigns {0} to more than one role")]
    NotInjective(String),
    #[error("pool of {0} APIs is too large to enumerate (limit {MAX_ENUMERATION_POOL}); sample a smaller pool")]
    PoolTooLarge(usize),
    #[error("graph has {have} APIs, pool needs {need}")]
    GraphTooSmall { have: usize, need: usize },
    #[error("no pool with {need} valid subsets after {tries} tries; best pool had {best_count}: {best_pool:?}")]
    PoolSearchExhausted {
        need: usize,
        tries: usize,
        best_count: usize,
        best_pool: Vec<String>,
    },
    #[error("generator failed: {0}")]
    Generator(crate::providers::ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Chain,
    Fork,
    Collider,
}

impl PatternKind {
    pub const ALL: [PatternKind; 3] = [PatternKind::Chain, PatternKind::Fork, PatternKind::Collider];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::Chain => "chain",
            PatternKind::Fork => "fork",
            PatternKind::Collider => "collider",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PatternKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown pattern {s:?}"))
    }
}

/// A role template over roles `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub n: usize,
    /// Directed role pairs, 1-based.
    pub edges: Vec<(usize, usize)>,
}

/// Chain: `i→i+1`. Fork: `1→j` for every other role. Collider: `i→n` for
/// every other role.
pub fn pattern_edges(kind: PatternKind, n: usize) -> Result<PatternSpec, SubsetError> {
    if !(3..=5).contains(&n) {
        return Err(SubsetError::Size(n));
    }
    let edges = match kind {
        PatternKind::Chain => (1..n).map(|i| (i, i + 1)).collect(),
        PatternKind::Fork => (2..=n).map(|j| (1, j)).collect(),
        PatternKind::Collider => (1..n).map(|i| (i, n)).collect(),
    };
    Ok(PatternSpec { kind, n, edges })
}

impl PatternSpec {
    /// Roles whose order carries no meaning (fork branches, collider
    /// parents), as a 0-based range.
    fn symmetric_roles(&self) -> std::ops::Range<usize> {
        match self.kind {
            PatternKind::Chain => 0..0,
            PatternKind::Fork => 1..self.n,
            PatternKind::Collider => 0..self.n - 1,
        }
    }
}

/// APIs assigned to roles; `roles[0]` plays role 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetCandidate {
    pub roles: Vec<String>,
}

impl SubsetCandidate {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(roles: I) -> Self {
        SubsetCandidate {
            roles: roles.into_iter().map(Into::into).collect(),
        }
    }

    /// Symmetric roles sorted by api_id, so equivalent assignments compare
    /// equal.
    pub fn canonical(&self, pattern: &PatternSpec) -> SubsetCandidate {
        let mut roles = self.roles.clone();
        let r = pattern.symmetric_roles();
        if r.end <= roles.len() {
            roles[r].sort();
        }
        SubsetCandidate { roles }
    }

    fn check_shape(&self, pattern: &PatternSpec) -> Result<(), SubsetError> {
        if self.roles.len() != pattern.n {
            return Err(SubsetError::RoleCount {
                got: self.roles.len(),
                want: pattern.n,
            });
        }
        let mut seen = HashSet::new();
        for r in &self.roles {
            if !seen.insert(r) {
                return Err(SubsetError::NotInjective(r.clone()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for SubsetCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .roles
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{}: {a}", i + 1))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// True iff every role edge `i→j` is backed by a masked parameter edge from
/// an output of role `i`'s API to an input of role `j`'s API.
pub fn is_valid_subset(
    graph: &ApiGraph,
    candidate: &SubsetCandidate,
    pattern: &PatternSpec,
    mask: EdgeMask,
) -> Result<bool, SubsetError> {
    candidate.check_shape(pattern)?;
    for a in &candidate.roles {
        if graph.api(a).is_none() {
            return Err(SubsetError::UnknownApi(a.clone()));
        }
    }
    Ok(pattern
        .edges
        .iter()
        .all(|&(i, j)| graph.has_api_edge(&candidate.roles[i - 1], &candidate.roles[j - 1], mask)))
}

/// Backtracking search over injective assignments of `pool` indices to
/// roles, emitting only canonical assignments (symmetric roles in ascending
/// pool order). `pool` must be sorted. Stops after `limit` results.
pub(crate) fn search(
    pool_len: usize,
    pattern: &PatternSpec,
    edge: &dyn Fn(usize, usize) -> bool,
    limit: Option<usize>,
) -> Vec<Vec<usize>> {
    // for each role, edges to earlier roles: (other role, role is source)
    let mut checks: Vec<Vec<(usize, bool)>> = vec![Vec::new(); pattern.n];
    for &(i, j) in &pattern.edges {
        let (i, j) = (i - 1, j - 1);
        if i < j {
            checks[j].push((i, false));
        } else {
            checks[i].push((j, true));
        }
    }
    let sym = pattern.symmetric_roles();
    let mut out = Vec::new();
    let mut assign: Vec<usize> = Vec::with_capacity(pattern.n);
    let mut used = vec![false; pool_len];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        role: usize,
        pool_len: usize,
        pattern: &PatternSpec,
        checks: &[Vec<(usize, bool)>],
        sym: &std::ops::Range<usize>,
        edge: &dyn Fn(usize, usize) -> bool,
        limit: Option<usize>,
        assign: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        if limit.is_some_and(|l| out.len() >= l) {
            return;
        }
        if role == pattern.n {
            out.push(assign.clone());
            return;
        }
        for a in 0..pool_len {
            if used[a] {
                continue;
            }
            if sym.contains(&role) && role > sym.start && assign[role - 1] > a {
                continue;
            }
            let ok = checks[role].iter().all(|&(other, role_is_source)| {
                if role_is_source {
                    edge(a, assign[other])
                } else {
                    edge(assign[other], a)
                }
            });
            if !ok {
                continue;
            }
            used[a] = true;
            assign.push(a);
            rec(role + 1, pool_len, pattern, checks, sym, edge, limit, assign, used, out);
            assign.pop();
            used[a] = false;
        }
    }

    rec(
        0,
        pool_len,
        pattern,
        &checks,
        &sym,
        edge,
        limit,
        &mut assign,
        &mut used,
        &mut out,
    );
    out
}

/// API-level edges between pool members as a set of index pairs.
pub(crate) fn pool_edges(graph: &ApiGraph, pool: &[String], mask: EdgeMask) -> HashSet<(usize, usize)> {
    let adj = graph.project_api_level(mask);
    adjacency_edges(&adj, pool)
}

pub(crate) fn adjacency_edges(adj: &crate::graph::ApiAdjacency, pool: &[String]) -> HashSet<(usize, usize)> {
    let mut edges = HashSet::new();
    for (i, a) in pool.iter().enumerate() {
        if let Some(targets) = adj.get(a) {
            for (j, b) in pool.iter().enumerate() {
                if i != j && targets.contains(b) {
                    edges.insert((i, j));
                }
            }
        }
    }
    edges
}

/// All canonical valid assignments drawn from `pool`.
pub fn enumerate_valid(
    graph: &ApiGraph,
    pool: &BTreeSet<String>,
    pattern: &PatternSpec,
    mask: EdgeMask,
) -> Result<BTreeSet<SubsetCandidate>, SubsetError> {
    if pool.len() > MAX_ENUMERATION_POOL {
        return Err(SubsetError::PoolTooLarge(pool.len()));
    }
    for a in pool {
        if graph.api(a).is_none() {
            return Err(SubsetError::UnknownApi(a.clone()));
        }
    }
    let pool: Vec<String> = pool.iter().cloned().collect();
    let edges = pool_edges(graph, &pool, mask);
    Ok(search(pool.len(), pattern, &|a, b| edges.contains(&(a, b)), None)
        .into_iter()
        .map(|idx| SubsetCandidate::new(idx.into_iter().map(|i| pool[i].clone())))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::{ApiDoc, Corpus, ParamRef, ParamSpec, PrimitiveType};
    use crate::graph::{build_graph, EdgeType, LabelRow};

    pub(crate) fn graph_from(apis: &[&str], edges: &[(&str, &str)]) -> ApiGraph {
        let api = |id: &str| ApiDoc {
            api_id: id.into(),
            domain: "d".into(),
            description: String::new(),
            inputs: vec![ParamSpec::input("i", PrimitiveType::Str, "")],
            outputs: vec![ParamSpec::output("o", PrimitiveType::Str, "")],
        };
        let corpus = Corpus::new(apis.iter().map(|a| api(a)).collect()).unwrap();
        let rows: Vec<LabelRow> = edges
            .iter()
            .map(|(a, b)| LabelRow::typed(ParamRef::output(*a, "o"), ParamRef::input(*b, "i"), EdgeType::Strong))
            .collect();
        build_graph(&corpus, &rows).unwrap()
    }

    fn pool(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn templates() {
        assert_eq!(
            pattern_edges(PatternKind::Chain, 3).unwrap().edges,
            vec![(1, 2), (2, 3)]
        );
        assert_eq!(pattern_edges(PatternKind::Fork, 3).unwrap().edges, vec![(1, 2), (1, 3)]);
        assert_eq!(
            pattern_edges(PatternKind::Collider, 4).unwrap().edges,
            vec![(1, 4), (2, 4), (3, 4)]
        );
        assert!(pattern_edges(PatternKind::Chain, 6).is_err());
        assert!(pattern_edges(PatternKind::Fork, 2).is_err());
    }

    #[test]
    fn chain_validity() {
        let g = graph_from(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let p = pattern_edges(PatternKind::Chain, 3).unwrap();
        assert!(is_valid_subset(&g, &SubsetCandidate::new(["A", "B", "C"]), &p, EdgeMask::default()).unwrap());
        assert!(!is_valid_subset(&g, &SubsetCandidate::new(["C", "B", "A"]), &p, EdgeMask::default()).unwrap());
        assert!(is_valid_subset(&g, &SubsetCandidate::new(["A", "B", "Z"]), &p, EdgeMask::default()).is_err());
        assert!(is_valid_subset(&g, &SubsetCandidate::new(["A", "B", "A"]), &p, EdgeMask::default()).is_err());
        let found = enumerate_valid(&g, &pool(&["A", "B", "C"]), &p, EdgeMask::default()).unwrap();
        assert_eq!(
            found.into_iter().collect::<Vec<_>>(),
            vec![SubsetCandidate::new(["A", "B", "C"])]
        );
    }

    #[test]
    fn empty_graph_has_nothing() {
        let g = graph_from(&["A", "B", "C"], &[]);
        let p = pattern_edges(PatternKind::Fork, 3).unwrap();
        assert!(!is_valid_subset(&g, &SubsetCandidate::new(["A", "B", "C"]), &p, EdgeMask::default()).unwrap());
        assert!(enumerate_valid(&g, &pool(&["A", "B", "C"]), &p, EdgeMask::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn symmetric_branches_collapse() {
        let g = graph_from(&["A", "B", "C", "D"], &[("A", "B"), ("A", "C"), ("A", "D")]);
        let p = pattern_edges(PatternKind::Fork, 3).unwrap();
        let found = enumerate_valid(&g, &pool(&["A", "B", "C", "D"]), &p, EdgeMask::default()).unwrap();
        assert_eq!(found.len(), 3);
        assert!(found.contains(&SubsetCandidate::new(["A", "C", "D"])));
        assert_eq!(
            SubsetCandidate::new(["A", "D", "C"]).canonical(&p),
            SubsetCandidate::new(["A", "C", "D"])
        );
        let c = pattern_edges(PatternKind::Collider, 3).unwrap();
        assert_eq!(
            SubsetCandidate::new(["C", "B", "A"]).canonical(&c),
            SubsetCandidate::new(["B", "C", "A"])
        );
    }

    #[test]
    fn pool_guard() {
        let ids: Vec<String> = (0..31).map(|i| format!("A{i:02}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let g = graph_from(&refs, &[]);
        let p = pattern_edges(PatternKind::Chain, 3).unwrap();
        let big: BTreeSet<String> = ids.iter().cloned().collect();
        assert!(matches!(
            enumerate_valid(&g, &big, &p, EdgeMask::default()),
            Err(SubsetError::PoolTooLarge(31))
        ));
    }
}
