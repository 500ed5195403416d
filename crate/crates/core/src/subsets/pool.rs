use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{enumerate_valid, PatternKind, PatternSpec, SubsetError};
use crate::graph::{ApiAdjacency, ApiGraph, EdgeMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSpec {
    /// Pool size; `None` means 5·n (15, 20, 25 for n = 3, 4, 5).
    pub size: Option<usize>,
    /// Valid canonical subsets the pool must contain.
    pub min_valid: usize,
    pub max_tries: usize,
}

impl Default for PoolSpec {
    fn default() -> Self {
        PoolSpec {
            size: None,
            min_valid: 5,
            max_tries: 200,
        }
    }
}

impl PoolSpec {
    pub fn size_for(&self, n: usize) -> usize {
        self.size.unwrap_or(5 * n)
    }
}

fn reverse(adj: &ApiAdjacency) -> ApiAdjacency {
    let mut rev = ApiAdjacency::new();
    for (a, targets) in adj {
        for b in targets {
            rev.entry(b.clone()).or_default().insert(a.clone());
        }
    }
    rev
}

/// One random valid assignment grown along the adjacency, or `None` when the
/// walk gets stuck.
fn sample_valid(
    adj: &ApiAdjacency,
    rev: &ApiAdjacency,
    pattern: &PatternSpec,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<String>> {
    let n = pattern.n;
    let star = |map: &ApiAdjacency, rng: &mut ChaCha8Rng| -> Option<(String, Vec<String>)> {
        let hubs: Vec<(&String, Vec<&String>)> = map
            .iter()
            .map(|(h, s)| (h, s.iter().filter(|x| *x != h).collect::<Vec<_>>()))
            .filter(|(_, s)| s.len() >= n - 1)
            .collect();
        let (hub, spokes) = hubs.choose(rng)?;
        let picked: Vec<String> = spokes.choose_multiple(rng, n - 1).map(|s| (*s).clone()).collect();
        Some(((*hub).clone(), picked))
    };
    match pattern.kind {
        PatternKind::Chain => {
            let starts: Vec<&String> = adj.keys().collect();
            let mut path = vec![(*starts.choose(rng)?).clone()];
            while path.len() < n {
                let last = path.last().expect("non-empty");
                let next: Vec<&String> = adj
                    .get(last)
                    .into_iter()
                    .flatten()
                    .filter(|b| !path.contains(b))
                    .collect();
                path.push((*next.choose(rng)?).clone());
            }
            Some(path)
        }
        PatternKind::Fork => {
            let (hub, mut spokes) = star(adj, rng)?;
            spokes.insert(0, hub);
            Some(spokes)
        }
        PatternKind::Collider => {
            let (hub, mut spokes) = star(rev, rng)?;
            spokes.push(hub);
            Some(spokes)
        }
    }
}

/// Samples an API pool that contains at least `spec.min_valid` canonical
/// valid subsets. Pools are seeded with randomly grown valid subsets and
/// topped up with random APIs; deterministic for a given seed.
pub fn sample_pool(
    graph: &ApiGraph,
    pattern: &PatternSpec,
    seed: u64,
    mask: EdgeMask,
    spec: &PoolSpec,
) -> Result<BTreeSet<String>, SubsetError> {
    let size = spec.size_for(pattern.n);
    let all: Vec<String> = graph.apis().keys().cloned().collect();
    if all.len() < size {
        return Err(SubsetError::GraphTooSmall {
            have: all.len(),
            need: size,
        });
    }
    let adj = graph.project_api_level(mask);
    let rev = reverse(&adj);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: (usize, BTreeSet<String>) = (0, BTreeSet::new());

    for _ in 0..spec.max_tries.max(1) {
        let mut pool = BTreeSet::new();
        let mut seeded = 0;
        let mut attempts = 0;
        while seeded < spec.min_valid && pool.len() < size && attempts < 20 * spec.min_valid.max(1) {
            attempts += 1;
            let Some(sub) = sample_valid(&adj, &rev, pattern, &mut rng) else {
                continue;
            };
            let fresh = sub.iter().filter(|a| !pool.contains(*a)).count();
            if pool.len() + fresh <= size {
                pool.extend(sub);
                seeded += 1;
            }
        }
        let mut rest: Vec<&String> = all.iter().filter(|a| !pool.contains(*a)).collect();
        rest.shuffle(&mut rng);
        for a in rest.into_iter().take(size - pool.len()) {
            pool.insert(a.clone());
        }
        let count = enumerate_valid(graph, &pool, pattern, mask)?.len();
        if count >= spec.min_valid {
            return Ok(pool);
        }
        if count > best.0 || best.1.is_empty() {
            best = (count, pool);
        }
    }
    Err(SubsetError::PoolSearchExhausted {
        need: spec.min_valid,
        tries: spec.max_tries,
        best_count: best.0,
        best_pool: best.1.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsets::pattern_edges;
    use crate::subsets::tests::graph_from;

    fn big_graph() -> ApiGraph {
        let ids: Vec<String> = (0..40).map(|i| format!("api{i:02}")).collect();
        let mut edges = Vec::new();
        for i in 0..40usize {
            for d in [1usize, 2, 3, 5, 8] {
                edges.push((ids[i].clone(), ids[(i + d) % 40].clone()));
            }
        }
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let e: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        graph_from(&refs, &e)
    }

    #[test]
    fn pools_have_enough_valid_subsets() {
        let g = big_graph();
        for kind in PatternKind::ALL {
            for n in 3..=5 {
                let p = pattern_edges(kind, n).unwrap();
                let pool = sample_pool(&g, &p, 11, EdgeMask::default(), &PoolSpec::default()).unwrap();
                assert_eq!(pool.len(), 5 * n);
                assert!(
                    enumerate_valid(&g, &pool, &p, EdgeMask::default()).unwrap().len() >= 5,
                    "{kind} {n}"
                );
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let g = big_graph();
        let p = pattern_edges(PatternKind::Chain, 4).unwrap();
        let a = sample_pool(&g, &p, 5, EdgeMask::default(), &PoolSpec::default()).unwrap();
        let b = sample_pool(&g, &p, 5, EdgeMask::default(), &PoolSpec::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_graph_cannot_fill_pool() {
        let g = graph_from(&["A", "B", "C", "D"], &[("A", "B"), ("B", "C")]);
        let p = pattern_edges(PatternKind::Chain, 3).unwrap();
        assert!(matches!(
            sample_pool(&g, &p, 1, EdgeMask::default(), &PoolSpec::default()),
            Err(SubsetError::GraphTooSmall { have: 4, need: 15 })
        ));
        let spec = PoolSpec {
            size: Some(4),
            min_valid: 5,
            max_tries: 3,
        };
        assert!(matches!(
            sample_pool(&g, &p, 1, EdgeMask::default(), &spec),
            Err(SubsetError::PoolSearchExhausted { best_count: 1, .. })
        ));
    }
}
