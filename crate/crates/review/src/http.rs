use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use serde::Deserialize;
use tower_http::services::ServeDir;

use redactor_core::corpus::{to_json_line, PiiCategory};
use redactor_core::substitute::Strategy;

use crate::error::ReviewError;
use crate::service::{DocStatus, ReviewService, SpanPatch};

pub const REVIEWER_HEADER: &str = "x-reviewer";

type Shared = State<Arc<ReviewService>>;

fn reviewer(headers: &HeaderMap) -> Result<String, ReviewError> {
    headers
        .get(REVIEWER_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .ok_or(ReviewError::MissingReviewer)
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    language: Option<String>,
    status: Option<DocStatus>,
}

async fn list_docs(State(svc): Shared, Query(q): Query<ListQuery>) -> Response {
    Json(svc.list(q.language.as_deref(), q.status)).into_response()
}

async fn get_doc(State(svc): Shared, Path(id): Path<String>) -> Result<Response, ReviewError> {
    Ok(Json(svc.document(&id)?).into_response())
}

async fn checkout(State(svc): Shared, Path(id): Path<String>, headers: HeaderMap) -> Result<Response, ReviewError> {
    let who = reviewer(&headers)?;
    Ok(Json(svc.checkout(&id, &who)?).into_response())
}

async fn release(State(svc): Shared, Path(id): Path<String>, headers: HeaderMap) -> Result<Response, ReviewError> {
    let who = reviewer(&headers)?;
    svc.release(&id, &who)?;
    Ok(Json(serde_json::json!({ "released": id })).into_response())
}

async fn patch_span(
    State(svc): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<SpanPatch>,
) -> Result<Response, ReviewError> {
    let who = reviewer(&headers)?;
    Ok(Json(svc.patch(&id, &who, body)?).into_response())
}

async fn commit(State(svc): Shared, Path(id): Path<String>, headers: HeaderMap) -> Result<Response, ReviewError> {
    let who = reviewer(&headers)?;
    svc.commit(&id, &who)?;
    Ok(Json(serde_json::json!({ "committed": id })).into_response())
}

async fn audit(State(svc): Shared, Path(id): Path<String>) -> Result<Response, ReviewError> {
    Ok(Json(svc.audit(&id)?).into_response())
}

#[derive(Debug, Deserialize)]
struct PreviewQuery {
    strategy: Option<String>,
}

async fn preview(State(svc): Shared, Path(id): Path<String>, Query(q): Query<PreviewQuery>) -> Result<Response, ReviewError> {
    let name = q.strategy.unwrap_or_else(|| "REALISTIC".into());
    let strategy: Strategy = name.parse().map_err(|_| ReviewError::UnknownStrategy(name))?;
    Ok(Json(svc.preview(&id, strategy)?).into_response())
}

#[derive(Debug, Deserialize)]
struct SuggestQuery {
    surface: String,
    category: PiiCategory,
    language: Option<String>,
}

async fn suggest(State(svc): Shared, Query(q): Query<SuggestQuery>) -> Result<Response, ReviewError> {
    let language = q.language.unwrap_or_else(|| "en".into());
    Ok(Json(svc.suggest(&q.surface, q.category, &language)?).into_response())
}

async fn export(State(svc): Shared) -> Response {
    let body: String = svc.documents().iter().map(|d| to_json_line(d) + "\n").collect();
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn index() -> Html<&'static str> {
    Html("<!doctype html><title>redactor review</title><p>No review UI bundle configured. The JSON API is available under /docs.</p>")
}

/// Builds the HTTP API. Mutating routes need an `X-Reviewer` header.
pub fn router(service: Arc<ReviewService>) -> Router {
    let static_dir = service.config().static_dir.clone();
    let api = Router::new()
        .route("/docs", get(list_docs))
        .route("/docs/{id}", get(get_doc))
        .route("/docs/{id}/checkout", post(checkout))
        .route("/docs/{id}/release", post(release))
        .route("/docs/{id}/spans", patch(patch_span))
        .route("/docs/{id}/commit", post(commit))
        .route("/docs/{id}/preview", get(preview))
        .route("/audit/{id}", get(audit))
        .route("/ledger/suggest", get(suggest))
        .route("/export", get(export))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)),
    }
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(service: Arc<ReviewService>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(service, listener).await
}

pub async fn serve_on(service: Arc<ReviewService>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
