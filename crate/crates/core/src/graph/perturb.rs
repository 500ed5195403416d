use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ApiGraph, EdgeMask, EdgeRecord, EdgeType, Provenance};
use crate::docmodel::ParamRef;

/// Simulates an automatically built graph: removes `fraction` of the masked
/// edges and adds the same number of spurious strong edges between
/// type-compatible parameters of different APIs that had no edge.
pub fn perturb_graph(graph: &ApiGraph, fraction: f64, seed: u64, mask: EdgeMask) -> ApiGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fraction = fraction.clamp(0.0, 1.0);

    let masked: Vec<&EdgeRecord> = graph.masked_edges(mask).collect();
    let k = (fraction * masked.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..masked.len()).collect();
    order.shuffle(&mut rng);
    let dropped: std::collections::HashSet<usize> = order[..k].iter().copied().collect();

    let mut candidates = Vec::new();
    for (src_id, src) in graph.apis() {
        for out in &src.outputs {
            for (dst_id, dst) in graph.apis() {
                if src_id == dst_id {
                    continue;
                }
                for inp in &dst.inputs {
                    if out.ptype.category() != inp.ptype.category() {
                        continue;
                    }
                    let s = ParamRef::output(src_id, &out.name);
                    let t = ParamRef::input(dst_id, &inp.name);
                    if graph.record(&s, &t).is_none() {
                        candidates.push((s, t));
                    }
                }
            }
        }
    }
    candidates.shuffle(&mut rng);

    let kept = graph.edges().filter(|e| !mask.contains(e.etype)).cloned().chain(
        masked
            .iter()
            .enumerate()
            .filter(|(i, _)| !dropped.contains(i))
            .map(|(_, e)| (*e).clone()),
    );
    let added = candidates.into_iter().take(k).map(|(source, target)| EdgeRecord {
        source,
        target,
        etype: EdgeType::Strong,
        provenance: Provenance::Model,
    });
    ApiGraph::from_parts(graph.apis().clone(), kept.chain(added).collect::<Vec<_>>())
        .expect("perturbation preserves graph invariants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::{ApiDoc, Corpus, ParamSpec, PrimitiveType};
    use crate::graph::{build_graph, LabelRow};

    fn graph() -> ApiGraph {
        let api = |id: &str| ApiDoc {
            api_id: id.into(),
            domain: "d".into(),
            description: String::new(),
            inputs: vec![ParamSpec::input("i", PrimitiveType::Str, "")],
            outputs: vec![ParamSpec::output("o", PrimitiveType::Str, "")],
        };
        let corpus = Corpus::new(["A", "B", "C", "D", "E"].map(api).to_vec()).unwrap();
        let rows: Vec<LabelRow> = [("A", "B"), ("B", "C"), ("C", "D"), ("D", "E"), ("E", "A")]
            .iter()
            .map(|(a, b)| LabelRow::typed(ParamRef::output(*a, "o"), ParamRef::input(*b, "i"), EdgeType::Strong))
            .collect();
        build_graph(&corpus, &rows).unwrap()
    }

    #[test]
    fn drops_and_adds_the_same_count() {
        let g = graph();
        let p = perturb_graph(&g, 0.4, 3, EdgeMask::default());
        assert_eq!(p.edge_count(), 5);
        let removed = g.edges().filter(|e| p.record(&e.source, &e.target).is_none()).count();
        assert_eq!(removed, 2);
        assert_eq!(p.edges().filter(|e| e.provenance == Provenance::Model).count(), 2);
    }

    #[test]
    fn deterministic_and_zero_fraction_is_identity() {
        let g = graph();
        assert_eq!(
            perturb_graph(&g, 0.4, 9, EdgeMask::default()),
            perturb_graph(&g, 0.4, 9, EdgeMask::default())
        );
        assert_eq!(perturb_graph(&g, 0.0, 1, EdgeMask::default()), g);
    }
}
