use std::path::Path;

use apigraph_annotate::http::{router, TOKEN_HEADER};
use apigraph_annotate::{AnnotationConfig, AnnotationStore};
use apigraph_core::docmodel::{load_corpus_dir, ParseOptions};
use apigraph_core::filter::{run_pipeline, FilterConfig};
use apigraph_core::graph::{build_graph, read_labels};
use apigraph_core::providers::{HashedEmbedder, JaccardScorer};
use apigraph_core::{Corpus, ParamRef};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const TOKEN: &str = "test-token";

fn corpus() -> Corpus {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/corpus");
    load_corpus_dir(&dir, &ParseOptions::default()).unwrap().corpus
}

/// The first `n` filter survivors of the fixture corpus.
fn queue(corpus: &Corpus, n: usize) -> Vec<(ParamRef, ParamRef)> {
    let report = run_pipeline(
        corpus,
        None,
        &HashedEmbedder::default(),
        &JaccardScorer,
        &FilterConfig::default(),
    )
    .unwrap();
    assert!(report.survivors.len() >= n);
    report
        .survivors
        .into_iter()
        .take(n)
        .map(|p| (p.source, p.target))
        .collect()
}

fn config() -> AnnotationConfig {
    AnnotationConfig {
        annotators: ["ana".into(), "ben".into()],
        calibration: 5,
    }
}

fn app(n: usize) -> Router {
    let c = corpus();
    let q = queue(&c, n);
    router(AnnotationStore::new(config(), c, q).unwrap(), TOKEN)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri).header(TOKEN_HEADER, TOKEN);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

fn label(pair: u64, who: &str, c: &str, n: &str) -> Value {
    json!({ "pair_id": pair, "annotator": who, "compatibility": c, "naturalness": n })
}

#[tokio::test]
async fn rejects_missing_or_wrong_token() {
    let app = app(3);
    for token in [None, Some("nope")] {
        let mut req = Request::builder().uri("/progress");
        if let Some(t) = token {
            req = req.header(TOKEN_HEADER, t);
        }
        let resp = app.clone().oneshot(req.body(Body::empty()).unwrap()).await.unwrap();
        assert_eq!(resp.status(), StatusCode::UNAUTHORIZED);
    }
}

#[tokio::test]
async fn full_campaign_with_three_disagreements() {
    let app = app(20);
    let disputed_pairs = [4u64, 11, 17];

    for who in ["ana", "ben"] {
        for expect in 1..=20u64 {
            let (status, body) = call(&app, "GET", &format!("/pairs/next?annotator={who}"), None).await;
            assert_eq!(status, StatusCode::OK);
            let task = &body["task"];
            assert_eq!(task["pair_id"], expect);
            assert_eq!(task["calibration"], expect <= 5);
            assert_eq!(task["source_doc"]["api_id"], task["source"]["api_id"]);
            let n = if who == "ben" && disputed_pairs.contains(&expect) {
                "unnatural"
            } else {
                "natural"
            };
            let (status, body) = call(&app, "POST", "/labels", Some(label(expect, who, "compatible", n))).await;
            assert_eq!(status, StatusCode::OK);
            let want = match (who, disputed_pairs.contains(&expect)) {
                ("ana", _) => "in_progress",
                (_, true) => "disputed",
                _ => "labeled",
            };
            assert_eq!(body["status"], want, "pair {expect}");
        }
        let (_, body) = call(&app, "GET", &format!("/pairs/next?annotator={who}"), None).await;
        assert_eq!(body["task"], Value::Null);
    }

    let (_, progress) = call(&app, "GET", "/progress", None).await;
    assert_eq!(progress["pairs"], 20);
    assert_eq!(progress["statuses"]["labeled"], 17);
    assert_eq!(progress["statuses"]["disputed"], 3);
    assert_eq!(progress["disagreements"], 3);
    assert_eq!(progress["labeled_by"]["ana"], 20);

    let (_, list) = call(&app, "GET", "/disagreements", None).await;
    let ids: Vec<u64> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["pair_id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, disputed_pairs);
    assert_eq!(list[0]["submissions"].as_array().unwrap().len(), 2);

    let (status, err) = call(&app, "GET", "/export", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["disputed"].as_array().unwrap().len(), 3);
    assert!(err["disputed"][0].as_str().unwrap().starts_with("#4 "));

    // only disputed pairs can be resolved
    let res =
        |p: u64| json!({ "pair_id": p, "compatibility": "conditional", "naturalness": "natural", "note": "discussed" });
    let (status, _) = call(&app, "POST", "/resolutions", Some(res(1))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    for p in disputed_pairs {
        let (status, body) = call(&app, "POST", "/resolutions", Some(res(p))).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["status"], "resolved");
    }
    let (status, _) = call(&app, "POST", "/resolutions", Some(res(4))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, list) = call(&app, "GET", "/disagreements", None).await;
    assert_eq!(list, json!([]));

    let (status, rows) = call(&app, "GET", "/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let rows_arr = rows.as_array().unwrap();
    assert_eq!(rows_arr.len(), 20);
    assert_eq!(rows_arr.iter().filter(|r| r["calibration"] == true).count(), 5);
    assert_eq!(rows_arr[3]["compatibility"], "conditional");
    assert_eq!(rows_arr[0]["compatibility"], "compatible");
    let (_, again) = call(&app, "GET", "/export", None).await;
    assert_eq!(again, rows);

    // exported labels feed the graph builder
    let labels = read_labels(&rows.to_string()).unwrap();
    let graph = build_graph(&corpus(), &labels).unwrap();
    assert_eq!(graph.edge_count(), 20);
}

#[tokio::test]
async fn rejects_bad_payloads() {
    let app = app(3);
    let (status, body) = call(&app, "POST", "/labels", Some(label(1, "ana", "maybe", "natural"))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("maybe"));
    let (status, _) = call(&app, "POST", "/labels", Some(label(9, "ana", "compatible", "natural"))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/labels", Some(label(1, "eve", "compatible", "natural"))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/pairs/next?annotator=eve", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/pairs/next", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn resubmission_supersedes() {
    let app = app(2);
    call(&app, "POST", "/labels", Some(label(1, "ana", "compatible", "natural"))).await;
    let (_, b) = call(
        &app,
        "POST",
        "/labels",
        Some(label(1, "ben", "incompatible", "natural")),
    )
    .await;
    assert_eq!(b["status"], "disputed");
    let (_, b) = call(&app, "POST", "/labels", Some(label(1, "ben", "compatible", "natural"))).await;
    assert_eq!(b["status"], "labeled");
    let (_, list) = call(&app, "GET", "/disagreements", None).await;
    assert_eq!(list, json!([]));
}
