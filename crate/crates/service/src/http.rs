//! REST routes over [`Service`].

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use classgit_core::wire::{
    CreateAssignmentRequest, CreateRepoRequest, ErrorBody, JoinRequest, LoginRequest, PushRequest, RegisterRequest,
};
use serde::Serialize;

use crate::error::ServiceError;
use crate::service::{Caller, Service};

/// Pushes carry whole objects as base64; leave room for a few MiB of content.
pub const MAX_BODY_BYTES: usize = 64 << 20;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = ErrorBody {
            error: self.code().to_owned(),
            detail: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<Service>;
type ApiResult<T> = Result<T, ServiceError>;

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/api/register", post(register))
        .route("/api/login", post(login))
        .route("/api/logout", post(logout))
        .route("/api/assignments", post(create_assignment))
        .route("/api/assignments/join", post(join))
        .route("/api/assignments/{id}/submissions", get(submissions))
        .route("/api/assignments/{id}/similarity", get(similarity))
        .route("/api/assignments/{id}/timing", get(timing))
        .route("/api/repos", post(create_repo))
        .route("/api/repos/{id}/fetch", get(fetch))
        .route("/api/repos/{id}/push", post(push))
        .route("/api/repos/{id}/analytics/contributions", get(contributions))
        .route("/api/repos/{id}/analytics/branches", get(branches))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(service)
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

/// Runs a blocking service call off the async workers, authenticating first.
async fn call<T, F>(svc: Shared, headers: &HeaderMap, f: F) -> ApiResult<Json<T>>
where
    T: Send + 'static,
    F: FnOnce(&Service, &Caller) -> ApiResult<T> + Send + 'static,
{
    let token = bearer(headers).ok_or(ServiceError::Unauthorized)?.to_owned();
    tokio::task::spawn_blocking(move || {
        let caller = svc.authenticate(&token)?;
        f(&svc, &caller)
    })
    .await
    .map_err(|e| ServiceError::Storage(e.to_string()))?
    .map(Json)
}

async fn unauthenticated<T, F>(svc: Shared, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Service) -> ApiResult<T> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ServiceError::Storage(e.to_string()))?
}

async fn register(State(svc): State<Shared>, Json(req): Json<RegisterRequest>) -> ApiResult<impl IntoResponse> {
    let out = unauthenticated(svc, move |s| s.register(&req)).await?;
    Ok((StatusCode::CREATED, Json(out)))
}

async fn login(State(svc): State<Shared>, Json(req): Json<LoginRequest>) -> ApiResult<impl IntoResponse> {
    Ok(Json(unauthenticated(svc, move |s| s.login(&req)).await?))
}

#[derive(Serialize)]
struct Empty {}

async fn logout(State(svc): State<Shared>, headers: HeaderMap) -> ApiResult<Json<Empty>> {
    if let Some(token) = bearer(&headers).map(str::to_owned) {
        unauthenticated(svc, move |s| s.logout(&token)).await?;
    }
    Ok(Json(Empty {}))
}

async fn create_assignment(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Json(req): Json<CreateAssignmentRequest>,
) -> ApiResult<impl IntoResponse> {
    let out = call(svc, &headers, move |s, c| s.create_assignment(c, &req)).await?;
    Ok((StatusCode::CREATED, out))
}

async fn join(State(svc): State<Shared>, headers: HeaderMap, Json(req): Json<JoinRequest>) -> ApiResult<impl IntoResponse> {
    call(svc, &headers, move |s, c| s.join(c, &req.invite_code)).await
}

async fn create_repo(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Json(req): Json<CreateRepoRequest>,
) -> ApiResult<impl IntoResponse> {
    let out = call(svc, &headers, move |s, c| s.create_repo(c, &req)).await?;
    Ok((StatusCode::CREATED, out))
}

async fn fetch(State(svc): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    call(svc, &headers, move |s, c| s.fetch(c, &id)).await
}

async fn push(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Json(req): Json<PushRequest>,
) -> ApiResult<impl IntoResponse> {
    call(svc, &headers, move |s, c| s.push(c, &id, req)).await
}

async fn submissions(State(svc): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    call(svc, &headers, move |s, c| s.list_submissions(c, &id)).await
}

async fn similarity(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<impl IntoResponse> {
    let file = q
        .get("file")
        .cloned()
        .ok_or_else(|| ServiceError::Invalid("query parameter `file` is required".into()))?;
    call(svc, &headers, move |s, c| s.similarity(c, &id, &file)).await
}

async fn timing(State(svc): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    call(svc, &headers, move |s, c| s.timing(c, &id)).await
}

async fn contributions(
    State(svc): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<impl IntoResponse> {
    let members = q.get("members").map(|m| {
        m.split(',')
            .map(str::trim)
            .filter(|m| !m.is_empty())
            .map(str::to_owned)
            .collect()
    });
    call(svc, &headers, move |s, c| s.contributions(c, &id, members)).await
}

async fn branches(State(svc): State<Shared>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    call(svc, &headers, move |s, c| s.branch_activity(c, &id)).await
}
