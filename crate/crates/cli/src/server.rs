// Copyright 2026 The ljp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! HTTP front of the annotation store.
//!
//! Routes, all JSON:
//! - `GET  /api/rubric`            the five rubric levels
//! - `POST /api/raters`            `{rater_id}` registers a rater
//! - `GET  /api/next?rater_id=R`   next task view, or `{"state":"done"}`
//! - `GET  /api/progress?rater_id=R`
//! - `POST /api/ratings`           a rating submission
//! - `GET  /api/export`            ratings plus per-model distribution
//!
//! Errors come back as `{error, message}` with a 4xx status; unparsable
//! requests use the kind `bad_request`.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ljp_core::annotate::{AnnotateError, AnnotationStore, RatingSubmission};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

#[derive(Debug, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
}

enum Failure {
    Store(AnnotateError),
    /// Query string or body did not parse.
    Request(StatusCode, String),
}

impl From<AnnotateError> for Failure {
    fn from(e: AnnotateError) -> Self {
        Failure::Store(e)
    }
}

impl From<QueryRejection> for Failure {
    fn from(e: QueryRejection) -> Self {
        Failure::Request(e.status(), e.body_text())
    }
}

impl From<JsonRejection> for Failure {
    fn from(e: JsonRejection) -> Self {
        Failure::Request(e.status(), e.body_text())
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let err = match self {
            Failure::Store(e) => e,
            Failure::Request(status, message) => {
                let body = ApiError {
                    error: "bad_request".into(),
                    message,
                };
                return (status, Json(body)).into_response();
            }
        };
        let (status, kind) = match &err {
            AnnotateError::UnknownTask(_) => (StatusCode::NOT_FOUND, "unknown_task"),
            AnnotateError::UnknownRater(_) => (StatusCode::NOT_FOUND, "unknown_rater"),
            AnnotateError::BadRaterId(_) => (StatusCode::UNPROCESSABLE_ENTITY, "bad_rater_id"),
            AnnotateError::ScoreOutOfRange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "score_out_of_range"),
            AnnotateError::Duplicate { .. } => (StatusCode::CONFLICT, "duplicate"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "store"),
        };
        let body = ApiError {
            error: kind.to_string(),
            message: err.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<AnnotationStore>;

#[derive(Debug, Serialize, Deserialize)]
pub struct RaterQuery {
    pub rater_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RaterRegistered {
    pub rater_id: String,
    pub created: bool,
}

async fn rubric(State(store): State<Shared>) -> impl IntoResponse {
    Json(store.rubric().clone())
}

async fn register(
    State(store): State<Shared>,
    q: Result<Json<RaterQuery>, JsonRejection>,
) -> Result<impl IntoResponse, Failure> {
    let Json(q) = q?;
    let created = store.register_rater(&q.rater_id)?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((
        status,
        Json(RaterRegistered {
            rater_id: q.rater_id,
            created,
        }),
    ))
}

async fn next(
    State(store): State<Shared>,
    q: Result<Query<RaterQuery>, QueryRejection>,
) -> Result<impl IntoResponse, Failure> {
    let Query(q) = q?;
    Ok(Json(store.next_task(&q.rater_id)?))
}

async fn progress(
    State(store): State<Shared>,
    q: Result<Query<RaterQuery>, QueryRejection>,
) -> Result<impl IntoResponse, Failure> {
    let Query(q) = q?;
    Ok(Json(store.progress(&q.rater_id)?))
}

async fn submit(
    State(store): State<Shared>,
    sub: Result<Json<RatingSubmission>, JsonRejection>,
) -> Result<impl IntoResponse, Failure> {
    let Json(sub) = sub?;
    // The store appends and fsyncs under its lock; keep that off the reactor.
    let rating = tokio::task::spawn_blocking(move || store.submit(&sub))
        .await
        .map_err(|e| AnnotateError::Store {
            path: "ratings".into(),
            message: e.to_string(),
        })??;
    Ok((StatusCode::CREATED, Json(rating)))
}

async fn export(State(store): State<Shared>) -> impl IntoResponse {
    Json(store.export())
}

pub fn router(store: Arc<AnnotationStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/rubric", get(rubric))
        .route("/api/raters", post(register))
        .route("/api/next", get(next))
        .route("/api/progress", get(progress))
        .route("/api/ratings", post(submit))
        .route("/api/export", get(export))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(store: Arc<AnnotationStore>, bind: &str, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
