use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Query, Request, State};
use axum::http::{HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::store::{AnnotationStore, LabelSubmission, Resolution, StoreError};

/// Header carrying the shared access token.
pub const TOKEN_HEADER: &str = "x-annotation-token";
/// Environment variable the token is read from.
pub const TOKEN_ENV: &str = "APIGRAPH_ANNOTATION_TOKEN";

#[derive(Clone)]
struct AppState {
    store: Arc<Mutex<AnnotationStore>>,
    token: Arc<str>,
}

impl AppState {
    fn store(&self) -> MutexGuard<'_, AnnotationStore> {
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }
}

struct ApiError(StatusCode, serde_json::Value);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::UnknownAnnotator(_) | StoreError::UnknownPair(_) => StatusCode::NOT_FOUND,
            StoreError::AlreadyResolved(_) | StoreError::NotDisputed { .. } | StoreError::Incomplete { .. } => {
                StatusCode::CONFLICT
            }
            StoreError::Queue(_) | StoreError::Config(_) => StatusCode::BAD_REQUEST,
            StoreError::Replay { .. } | StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": e.to_string() });
        if let StoreError::Incomplete { disputed, unlabeled } = &e {
            body["disputed"] = json!(disputed);
            body["unlabeled"] = json!(unlabeled);
        }
        ApiError(code, body)
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError(
            StatusCode::BAD_REQUEST,
            json!({ "error": format!("invalid payload: {e}") }),
        )
    })
}

async fn require_token(State(state): State<AppState>, headers: HeaderMap, req: Request, next: Next) -> Response {
    let given = headers.get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
    if given != Some(&*state.token) {
        return ApiError(StatusCode::UNAUTHORIZED, json!({ "error": "missing or invalid token" })).into_response();
    }
    next.run(req).await
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

async fn next_pair(State(state): State<AppState>, Query(q): Query<NextQuery>) -> Result<Response, ApiError> {
    let annotator = q.annotator.ok_or_else(|| {
        ApiError(
            StatusCode::BAD_REQUEST,
            json!({ "error": "missing annotator query parameter" }),
        )
    })?;
    let task = state.store().assign_next(&annotator)?;
    Ok(Json(json!({ "task": task })).into_response())
}

async fn submit_label(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let submission: LabelSubmission = parse(&body)?;
    let pair_id = submission.pair_id;
    let status = state.store().submit_label(submission)?;
    Ok(Json(json!({ "pair_id": pair_id, "status": status })).into_response())
}

async fn disagreements(State(state): State<AppState>) -> Response {
    Json(state.store().disagreements()).into_response()
}

async fn resolve(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let resolution: Resolution = parse(&body)?;
    let pair_id = resolution.pair_id;
    let status = state.store().resolve(resolution)?;
    Ok(Json(json!({ "pair_id": pair_id, "status": status })).into_response())
}

async fn export(State(state): State<AppState>) -> Result<Response, ApiError> {
    let rows = state.store().export_labels()?;
    Ok(Json(apigraph_core::graph::labels_to_value(&rows)).into_response())
}

async fn progress(State(state): State<AppState>) -> Response {
    Json(state.store().progress()).into_response()
}

/// All endpoints, guarded by the shared `token`.
pub fn router(store: AnnotationStore, token: impl Into<String>) -> Router {
    let state = AppState {
        store: Arc::new(Mutex::new(store)),
        token: Arc::from(token.into()),
    };
    Router::new()
        .route("/pairs/next", get(next_pair))
        .route("/labels", post(submit_label))
        .route("/disagreements", get(disagreements))
        .route("/resolutions", post(resolve))
        .route("/export", get(export))
        .route("/progress", get(progress))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

/// Serves [`router`] on `addr` until interrupted.
pub async fn serve(store: AnnotationStore, token: String, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store, token))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
