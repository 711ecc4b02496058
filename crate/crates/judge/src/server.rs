//! HTTP wire API.
//!
//! | method | path            | body / query                         |
//! |--------|-----------------|--------------------------------------|
//! | POST   | `/api/plan`     | `PlanRequest`                        |
//! | POST   | `/api/session`  | `{"token": ...}`                     |
//! | GET    | `/api/next`     | bearer token                         |
//! | POST   | `/api/submit`   | bearer token, `{"pair_id", "choice"}`|
//! | GET    | `/api/progress` | bearer token                         |
//! | GET    | `/api/export`   | `?annotator=&complete_batches=`      |
//!
//! Errors are `{"error": message}` with a matching status code. A repeated
//! submission answers 409 with the stored record under `"original"`.

use std::net::SocketAddr;
use std::sync::Arc;

use acs_core::judgment::Choice;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;

use crate::plan::PlanRequest;
use crate::service::{ExportFilter, JudgeService, SubmitRejection};
use crate::JudgeError;

type Shared = Arc<JudgeService>;

struct ApiError(StatusCode, serde_json::Value);

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self(status, json!({ "error": message.into() }))
    }
}

impl From<JudgeError> for ApiError {
    fn from(e: JudgeError) -> Self {
        let status = match e {
            JudgeError::Plan(_) => StatusCode::UNPROCESSABLE_ENTITY,
            JudgeError::Conflict(_) | JudgeError::NoPlan => StatusCode::CONFLICT,
            JudgeError::Unauthorized => StatusCode::UNAUTHORIZED,
            JudgeError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn annotator(service: &JudgeService, headers: &HeaderMap) -> ApiResult<String> {
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing bearer token"))?;
    Ok(service.open_session(token.trim())?)
}

async fn create_plan(State(s): State<Shared>, Json(req): Json<PlanRequest>) -> ApiResult<Response> {
    Ok(Json(s.create_plan(&req)?).into_response())
}

#[derive(Deserialize)]
struct SessionRequest {
    token: String,
}

async fn open_session(State(s): State<Shared>, Json(req): Json<SessionRequest>) -> ApiResult<Response> {
    let annotator = s.open_session(&req.token)?;
    let progress = s.progress(&annotator)?;
    Ok(Json(json!({ "annotator": annotator, "progress": progress })).into_response())
}

async fn next(State(s): State<Shared>, headers: HeaderMap) -> ApiResult<Response> {
    let a = annotator(&s, &headers)?;
    Ok(Json(s.next_item(&a)?).into_response())
}

async fn progress(State(s): State<Shared>, headers: HeaderMap) -> ApiResult<Response> {
    let a = annotator(&s, &headers)?;
    Ok(Json(s.progress(&a)?).into_response())
}

#[derive(Deserialize)]
struct SubmitRequest {
    pair_id: String,
    choice: Choice,
}

async fn submit(
    State(s): State<Shared>,
    headers: HeaderMap,
    Json(req): Json<SubmitRequest>,
) -> ApiResult<Response> {
    let a = annotator(&s, &headers)?;
    let outcome = tokio::task::spawn_blocking(move || s.submit(&a, &req.pair_id, req.choice))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    match outcome {
        Ok(ack) => Ok(Json(ack).into_response()),
        Err(SubmitRejection::UnknownPair) => Err(ApiError::new(StatusCode::NOT_FOUND, "unknown pair")),
        Err(SubmitRejection::NotAssigned) => {
            Err(ApiError::new(StatusCode::FORBIDDEN, "pair not assigned to this annotator"))
        }
        Err(SubmitRejection::Duplicate(original)) => Err(ApiError(
            StatusCode::CONFLICT,
            json!({ "error": "already judged", "original": original }),
        )),
    }
}

async fn export(State(s): State<Shared>, Query(filter): Query<ExportFilter>) -> ApiResult<Response> {
    let mut body = String::new();
    for r in s.export(&filter) {
        body.push_str(&serde_json::to_string(&r).map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        })?);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/api/plan", post(create_plan))
        .route("/api/session", post(open_session))
        .route("/api/next", get(next))
        .route("/api/submit", post(submit))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .with_state(service)
}

/// Binds `addr` (port 0 picks a free port), prints `listening on ADDR` and
/// serves until the process ends.
pub async fn serve(service: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    println!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}

/// Binds `addr` and serves in the background on the current runtime,
/// returning the bound address.
pub async fn spawn(service: Shared, addr: SocketAddr) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move { axum::serve(listener, router(service)).await });
    Ok(local)
}
