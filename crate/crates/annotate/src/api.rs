//! HTTP JSON API over a [`Store`].

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::error::AnnotateError;
use crate::store::{Assignment, ExportPolicy, NewBatch, NewJudgment, Store};

impl IntoResponse for AnnotateError {
    fn into_response(self) -> Response {
        let status = match &self {
            AnnotateError::InvalidBatch(_)
            | AnnotateError::MissingAnnotator
            | AnnotateError::InvalidJudgment(_) => StatusCode::BAD_REQUEST,
            AnnotateError::UnknownBatch(_)
            | AnnotateError::UnknownTask(_)
            | AnnotateError::UnknownCandidate { .. } => StatusCode::NOT_FOUND,
            AnnotateError::OverQuota { .. } | AnnotateError::Conflict { .. } => StatusCode::CONFLICT,
            AnnotateError::AgreementUndefined(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AnnotateError::Io(..) | AnnotateError::Log { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({ "error": { "kind": self.kind(), "message": self.to_string() } });
        (status, Json(body)).into_response()
    }
}

fn bad_request(message: String) -> Response {
    let body = json!({ "error": { "kind": "bad_request", "message": message } });
    (StatusCode::BAD_REQUEST, Json(body)).into_response()
}

type Shared = Arc<Store>;

/// Runs store work off the async executor; appends fsync.
async fn blocking<T, F>(store: &Shared, f: F) -> Result<T, Response>
where
    F: FnOnce(&Store) -> Result<T, AnnotateError> + Send + 'static,
    T: Send + 'static,
{
    let store = store.clone();
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| bad_request(format!("worker failed: {e}")))?
        .map_err(IntoResponse::into_response)
}

async fn create_batch(State(store): State<Shared>, Json(req): Json<NewBatch>) -> Response {
    match blocking(&store, move |s| s.create_batch(req)).await {
        Ok(summary) => (StatusCode::CREATED, Json(summary)).into_response(),
        Err(r) => r,
    }
}

#[derive(Deserialize)]
struct NextQuery {
    #[serde(default)]
    annotator: String,
}

#[derive(Serialize)]
struct NextReply {
    task: Option<Assignment>,
}

async fn next_task(State(store): State<Shared>, Query(q): Query<NextQuery>) -> Response {
    match blocking(&store, move |s| s.next_task(&q.annotator)).await {
        Ok(task) => Json(NextReply { task }).into_response(),
        Err(r) => r,
    }
}

async fn submit(State(store): State<Shared>, Json(j): Json<NewJudgment>) -> Response {
    match blocking(&store, move |s| s.submit(j)).await {
        Ok(ack) => Json(ack).into_response(),
        Err(r) => r,
    }
}

#[derive(Deserialize)]
struct ExportQuery {
    policy: Option<String>,
}

async fn export(State(store): State<Shared>, Path(id): Path<String>, Query(q): Query<ExportQuery>) -> Response {
    let policy = match q.policy.as_deref().map(str::parse::<ExportPolicy>) {
        None => ExportPolicy::default(),
        Some(Ok(p)) => p,
        Some(Err(e)) => return bad_request(e),
    };
    match blocking(&store, move |s| s.export(&id, policy)).await {
        Ok(e) => Json(e).into_response(),
        Err(r) => r,
    }
}

async fn agreement(State(store): State<Shared>, Path(id): Path<String>) -> Response {
    match blocking(&store, move |s| s.agreement(&id)).await {
        Ok(a) => Json(a).into_response(),
        Err(r) => r,
    }
}

async fn progress(State(store): State<Shared>, Path(id): Path<String>) -> Response {
    match blocking(&store, move |s| s.progress(&id)).await {
        Ok(p) => Json(p).into_response(),
        Err(r) => r,
    }
}

/// Builds the API router. When `ui_dir` is given, every other path is
/// served from that directory.
pub fn router(store: Arc<Store>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/batches", post(create_batch))
        .route("/tasks/next", get(next_task))
        .route("/judgments", post(submit))
        .route("/batches/{id}/export", get(export))
        .route("/batches/{id}/agreement", get(agreement))
        .route("/batches/{id}/progress", get(progress))
        .with_state(store);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves the API on `listener` until the future is dropped.
pub async fn serve(listener: tokio::net::TcpListener, store: Arc<Store>, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(store, ui_dir)).await
}
