//! HTTP routes over a [`Store`].

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mtdfind_core::simulator::TrialConfig;
use serde::{Deserialize, Serialize};
use serde_json::json;
use uuid::Uuid;

use crate::error::{ErrorCode, ServiceError};
use crate::event::TrialEvent;
use crate::state::DecisionView;
use crate::store::{AppendOptions, Store, TrialSummary};

/// Optimistic-concurrency header: the sequence number the client last saw.
pub const EXPECTED_SEQ_HEADER: &str = "x-expected-seq";
/// Set to `true` to enroll after the MTD has been identified.
pub const CONTINUE_HEADER: &str = "x-continue-after-identification";
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self.code() {
            ErrorCode::Validation => StatusCode::BAD_REQUEST,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %self, "request failed");
        }
        let body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload.map(|Json(v)| v).map_err(|e| ServiceError::Validation(e.body_text()))
}

fn trial_id(raw: &str) -> ApiResult<Uuid> {
    Uuid::parse_str(raw).map_err(|_| ServiceError::NotFound(format!("no trial {raw}")))
}

fn header<'a>(headers: &'a HeaderMap, name: &str) -> ApiResult<Option<&'a str>> {
    headers
        .get(name)
        .map(|v| v.to_str().map_err(|_| ServiceError::Validation(format!("header {name} is not text"))))
        .transpose()
}

/// Run store work off the async executor; appends fsync.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(format!("worker failed: {e}")))?
}

#[derive(Debug, Deserialize)]
pub struct CreateTrial {
    pub config: TrialConfig,
    /// Clinical time of creation; defaults to 0.
    #[serde(default)]
    pub at: f64,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: Uuid,
    pub seq: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Appended {
    pub seq: u64,
}

#[derive(Debug, Deserialize)]
pub struct AsOf {
    pub as_of: Option<f64>,
}

#[derive(Debug, Deserialize)]
pub struct WhatIf {
    #[serde(default)]
    pub as_of: Option<f64>,
    #[serde(default)]
    pub events: Vec<TrialEvent>,
}

async fn create_trial(
    State(store): State<Arc<Store>>,
    headers: HeaderMap,
    payload: Result<Json<CreateTrial>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let req = body(payload)?;
    let key = match header(&headers, IDEMPOTENCY_HEADER)? {
        Some(h) => Some(h.to_string()),
        None => req.idempotency_key,
    };
    let (id, fresh) = blocking(move || store.create_trial(req.config, req.at, key)).await?;
    let status = if fresh { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(Created { id, seq: 0 })))
}

async fn append_event(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<TrialEvent>, JsonRejection>,
) -> ApiResult<Json<Appended>> {
    let id = trial_id(&id)?;
    let event = body(payload)?;
    let expected_seq = header(&headers, EXPECTED_SEQ_HEADER)?
        .map(|v| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| ServiceError::Validation(format!("{EXPECTED_SEQ_HEADER} must be a sequence number")))
        })
        .transpose()?;
    let continue_after_identification = match header(&headers, CONTINUE_HEADER)? {
        None => false,
        Some(v) if v.eq_ignore_ascii_case("true") => true,
        Some(v) if v.eq_ignore_ascii_case("false") => false,
        Some(_) => return Err(ServiceError::Validation(format!("{CONTINUE_HEADER} must be true or false"))),
    };
    let opts = AppendOptions {
        expected_seq,
        continue_after_identification,
    };
    let seq = blocking(move || store.append(id, event, opts)).await?;
    Ok(Json(Appended { seq }))
}

async fn get_decision(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    query: Result<Query<AsOf>, QueryRejection>,
) -> ApiResult<Json<DecisionView>> {
    let id = trial_id(&id)?;
    let Query(q) = query.map_err(|e| ServiceError::Validation(e.body_text()))?;
    Ok(Json(store.decision(id, q.as_of, &[])?))
}

async fn what_if(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    payload: Result<Json<WhatIf>, JsonRejection>,
) -> ApiResult<Json<DecisionView>> {
    let id = trial_id(&id)?;
    let req = body(payload)?;
    Ok(Json(store.decision(id, req.as_of, &req.events)?))
}

async fn get_state(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<TrialSummary>> {
    let id = trial_id(&id)?;
    Ok(Json(store.summary(id)?))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn fallback() -> ServiceError {
    ServiceError::NotFound("no such route".into())
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/trials", post(create_trial))
        .route("/trials/{id}/events", post(append_event))
        .route("/trials/{id}/decision", get(get_decision))
        .route("/trials/{id}/decision:what-if", post(what_if))
        .route("/trials/{id}/state", get(get_state))
        .fallback(fallback)
        .with_state(store)
}
