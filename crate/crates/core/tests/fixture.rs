//! Hand-computed and frozen values on the twelve-API fixture corpus.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use apigraph_core::filter::{run_pipeline, FilterConfig};
use apigraph_core::graph::{
    compute_stats, compute_stats_with, deserialize, perturb_graph, serialize, Denominator, EdgeCounts,
};
use apigraph_core::providers::{HashedEmbedder, JaccardScorer};
use apigraph_core::retrieval::{evaluate_retrieval, TopRankSelector};
use apigraph_core::subsets::{
    enumerate_valid, pattern_edges, run_pattern_eval, score_candidates, GraphWalkGenerator, PatternKind, PoolSpec,
    SubsetCandidate,
};
use apigraph_core::{Direction, EdgeMask, EdgeType, ParamRef};

#[test]
fn corpus_shape() {
    let c = common::corpus();
    assert_eq!(c.len(), 12);
    let inputs: usize = c.apis().iter().map(|d| d.inputs.len()).sum();
    let outputs: usize = c.apis().iter().map(|d| d.outputs.len()).sum();
    assert_eq!((inputs, outputs), (25, 25));
    let domains: BTreeSet<&str> = c.apis().iter().map(|d| d.domain.as_str()).collect();
    assert_eq!(domains, BTreeSet::from(["gmail", "phone", "spotify"]));
    // nested list outputs are flattened with [] markers
    let sa = c.get("Spotify::SearchArtists").unwrap();
    assert!(sa.output("artists[].artist_id").is_some());
    assert!(sa.output("artists[].image.url").is_some());
}

#[test]
fn pair_count_matches_cartesian_product() {
    let c = common::corpus();
    let mut brute = 0;
    for a in c.apis() {
        for b in c.apis() {
            if a.api_id != b.api_id {
                brute += a.outputs.len() * b.inputs.len();
            }
        }
    }
    assert_eq!(brute, 573);
    let report = run_pipeline(
        &c,
        Some(&common::policy()),
        &HashedEmbedder::default(),
        &JaccardScorer,
        &FilterConfig::default(),
    )
    .unwrap();
    assert_eq!(report.counts.initial, 573);
}

#[test]
fn gold_pairs_survive_every_stage() {
    let c = common::corpus();
    let labels = common::labels();
    for multi_provider in [false, true] {
        let config = FilterConfig {
            multi_provider,
            ..FilterConfig::default()
        };
        let report = run_pipeline(
            &c,
            Some(&common::policy()),
            &HashedEmbedder::default(),
            &JaccardScorer,
            &config,
        )
        .unwrap();
        let k = report.counts;
        assert!(k.initial >= k.after_rule && k.after_rule >= k.after_semantic && k.after_semantic >= k.after_context);
        let kept: BTreeSet<(&ParamRef, &ParamRef)> = report.survivors.iter().map(|p| (&p.source, &p.target)).collect();
        let gold: Vec<_> = labels.iter().filter(|r| r.edge_type() != EdgeType::Non).collect();
        assert_eq!(gold.len(), 9);
        for row in gold {
            assert!(
                kept.contains(&(&row.source, &row.target)),
                "{} -> {} dropped",
                row.source,
                row.target
            );
        }
        // survivors are sorted by (source, target)
        assert!(report
            .survivors
            .windows(2)
            .all(|w| (&w[0].source, &w[0].target) < (&w[1].source, &w[1].target)));
    }
}

#[test]
fn domain_policy_blocks_spotify_phone_pairs() {
    let c = common::corpus();
    let config = FilterConfig {
        multi_provider: true,
        ..FilterConfig::default()
    };
    let report = run_pipeline(
        &c,
        Some(&common::policy()),
        &HashedEmbedder::default(),
        &JaccardScorer,
        &config,
    )
    .unwrap();
    for p in &report.survivors {
        let pair = (
            c.domain_of(&p.source.api_id).unwrap(),
            c.domain_of(&p.target.api_id).unwrap(),
        );
        assert_ne!(pair, ("spotify", "phone"));
        assert_ne!(pair, ("phone", "spotify"));
    }
}

#[test]
fn stats_match_hand_computation() {
    let c = common::corpus();
    let g = common::gold_graph(&c);
    let s = compute_stats(&g, EdgeMask::default());
    assert_eq!(
        s.counts,
        EdgeCounts {
            strong: 6,
            weak: 3,
            non: 4
        }
    );
    assert_eq!((s.param_edges, s.api_edges), (9, 8));
    assert_eq!((s.active_inputs, s.active_apis), (6, 4));
    assert!((s.d_avg_param - 1.5).abs() < 1e-9);
    assert!((s.d_avg_api - 2.0).abs() < 1e-9);
    assert!((s.cross_param_pct - 100.0 / 3.0).abs() < 1e-9);
    assert!((s.cross_api_pct - 37.5).abs() < 1e-9);

    let all = compute_stats_with(&g, EdgeMask::default(), Denominator::AllNodes);
    assert_eq!((all.input_params, all.apis), (25, 12));
    assert!((all.d_avg_param - 0.36).abs() < 1e-9);
    assert!((all.d_avg_api - 8.0 / 12.0).abs() < 1e-9);

    let strong = compute_stats(&g, EdgeMask::STRONG);
    assert_eq!(strong.param_edges, 6);
    // FA.access_token 2, FA.artist_id 1, ShowThread.thread_id 1, SendEmail.email_addresses 2
    assert!((strong.d_avg_param - 6.0 / 4.0).abs() < 1e-9);
}

#[test]
fn connected_sources_and_projection() {
    let c = common::corpus();
    let g = common::gold_graph(&c);
    let token = ParamRef::input("Spotify::FollowArtist", "access_token");
    let src = g.connected_sources(&token, EdgeMask::default()).unwrap();
    assert_eq!(
        src,
        BTreeSet::from(["Spotify::Login".to_string(), "Spotify::Signup".to_string()])
    );
    let addr = ParamRef::new("Gmail::SendEmail", Direction::Input, "email_addresses");
    assert_eq!(g.connected_sources(&addr, EdgeMask::STRONG).unwrap().len(), 2);
    assert_eq!(g.connected_sources(&addr, EdgeMask::default()).unwrap().len(), 3);
    assert!(g.has_api_edge("Spotify::SearchArtists", "Gmail::SearchThreads", EdgeMask::default()));
    assert!(!g.has_api_edge("Spotify::SearchArtists", "Gmail::SearchThreads", EdgeMask::STRONG));
    // a stored non edge never connects
    assert!(!g.has_api_edge("Phone::SendTextMessage", "Gmail::ShowThread", EdgeMask::default()));
}

#[test]
fn graph_file_round_trips() {
    let c = common::corpus();
    let g = common::gold_graph(&c);
    let text = serialize(&g);
    let back = deserialize(&text).unwrap();
    assert_eq!(back, g);
    assert_eq!(serialize(&back), text);
}

/// Ranks checked against an independent re-implementation of the hashed
/// embedding and cosine ranking.
#[test]
fn retrieval_ranks_are_frozen() {
    let c = common::corpus();
    let g = common::gold_graph(&c);
    let inst = common::instances(&c);
    let e = HashedEmbedder::default();
    let mask = EdgeMask::default();

    let plain = evaluate_retrieval(&inst, &c, None, &e, &TopRankSelector, mask).unwrap();
    let ranks: Vec<usize> = plain.outcomes.iter().map(|o| o.rank).collect();
    assert_eq!(ranks, vec![1, 1, 7, 5, 2, 4, 1, 5, 1, 1]);
    let m = &plain.metrics;
    assert!((m.avg_rank - 2.8).abs() < 1e-9);
    assert_eq!(m.worst_rank, 7);
    let expect_top: BTreeMap<usize, f64> = [(1, 50.0), (2, 60.0), (5, 90.0), (10, 100.0), (20, 100.0)].into();
    assert_eq!(m.top_k, expect_top);
    assert!((m.final_selection_acc - 50.0).abs() < 1e-9);

    let graph = evaluate_retrieval(&inst, &c, Some(&g), &e, &TopRankSelector, mask).unwrap();
    let ranks: Vec<usize> = graph.outcomes.iter().map(|o| o.rank).collect();
    assert_eq!(ranks, vec![1, 1, 1, 2, 1, 1, 1, 5, 1, 1]);
    assert!((graph.metrics.avg_rank - 1.5).abs() < 1e-9);
    assert_eq!(graph.metrics.top_k[&1], 80.0);
    for o in &graph.outcomes {
        assert!(o.rank <= o.similarity_rank);
    }
}

#[test]
fn perturbed_graph_sits_between_conditions_on_average() {
    let c = common::corpus();
    let g = common::gold_graph(&c);
    let inst = common::instances(&c);
    let e = HashedEmbedder::default();
    let mask = EdgeMask::default();
    let mut total = 0.0;
    for seed in 0..20u64 {
        let p = perturb_graph(&g, 0.3, seed, mask);
        assert_eq!(p.masked_edges(mask).count(), g.masked_edges(mask).count());
        total += evaluate_retrieval(&inst, &c, Some(&p), &e, &TopRankSelector, mask)
            .unwrap()
            .metrics
            .avg_rank;
    }
    let mean = total / 20.0;
    assert!(mean > 1.5 && mean < 2.8, "mean avg rank {mean}");
}

#[test]
fn pattern_counts_on_full_corpus() {
    let c = common::corpus();
    let g = common::gold_graph(&c);
    let pool: BTreeSet<String> = g.apis().keys().cloned().collect();
    let count = |k| {
        enumerate_valid(&g, &pool, &pattern_edges(k, 3).unwrap(), EdgeMask::default())
            .unwrap()
            .len()
    };
    assert_eq!(count(PatternKind::Chain), 2);
    assert_eq!(count(PatternKind::Fork), 1);
    assert_eq!(count(PatternKind::Collider), 6);
    let chains = enumerate_valid(
        &g,
        &pool,
        &pattern_edges(PatternKind::Chain, 3).unwrap(),
        EdgeMask::default(),
    )
    .unwrap();
    assert!(chains.contains(&SubsetCandidate::new([
        "Spotify::SearchArtists",
        "Gmail::SearchThreads",
        "Gmail::ShowThread"
    ])));
    assert!(chains.contains(&SubsetCandidate::new([
        "Gmail::SearchThreads",
        "Gmail::ShowThread",
        "Gmail::SendEmail"
    ])));
    let four = pattern_edges(PatternKind::Chain, 4).unwrap();
    let four = enumerate_valid(&g, &pool, &four, EdgeMask::default()).unwrap();
    assert_eq!(
        four.into_iter().collect::<Vec<_>>(),
        vec![SubsetCandidate::new([
            "Spotify::SearchArtists",
            "Gmail::SearchThreads",
            "Gmail::ShowThread",
            "Gmail::SendEmail"
        ])]
    );
}

#[test]
fn hand_scored_collider_batch() {
    let c = common::corpus();
    let g = common::gold_graph(&c);
    let p = pattern_edges(PatternKind::Collider, 3).unwrap();
    let batch = [
        ["Spotify::Login", "Spotify::Signup", "Spotify::FollowArtist"],
        ["Spotify::SearchArtists", "Spotify::Login", "Spotify::FollowArtist"],
        ["Phone::SearchContacts", "Gmail::ShowThread", "Gmail::SendEmail"],
        ["Gmail::SendEmail", "Phone::SearchContacts", "Gmail::ShowThread"],
        [
            "Gmail::SearchThreads",
            "Spotify::SearchArtists",
            "Spotify::FollowArtist",
        ],
    ]
    .map(SubsetCandidate::new);
    let score = score_candidates(&batch, &g, &p, EdgeMask::default());
    assert_eq!((score.emitted_distinct, score.valid_distinct), (5, 3));
    assert!((score.precision - 0.6).abs() < 1e-9);
}

#[test]
fn gold_walker_is_perfectly_precise() {
    let c = common::corpus();
    let g = common::gold_graph(&c);
    let walker = GraphWalkGenerator::from_graph(&g, EdgeMask::default());
    let spec = PoolSpec {
        size: Some(12),
        min_valid: 1,
        max_tries: 50,
    };
    for kind in PatternKind::ALL {
        let p = pattern_edges(kind, 3).unwrap();
        let report = run_pattern_eval(&g, &walker, &p, 5, 7, EdgeMask::default(), &spec).unwrap();
        assert_eq!(report.runs.len(), 5);
        assert!((report.mean_precision - 1.0).abs() < 1e-12);
    }
}
