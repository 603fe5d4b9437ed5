//! HTTP surface.
//!
//! - `POST /api/ner` with `{"text": "...", "model": "..."}` returns
//!   `{"normalized", "entities": [{"surface", "class", "start", "end", "url", "color"}], "model", "ms"}`.
//!   Offsets are half-open character positions in `normalized`.
//! - `GET /api/models` returns the configured model ids as a JSON array.
//! - `GET /healthz` returns 200.
//!
//! Errors are `{"error": <code>, "message": <text>}` with a 4xx or 5xx status.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ner_core::Pipeline;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ServiceConfig;
use crate::links::{class_color, wikipedia_link};

/// Loaded pipelines, shared read-only by every request.
pub struct AppState {
    pub config: ServiceConfig,
    pub pipelines: BTreeMap<String, Arc<Pipeline>>,
}

impl AppState {
    /// Builds every configured pipeline; any load failure is fatal here.
    pub fn new(config: ServiceConfig) -> anyhow::Result<Self> {
        config.validate()?;
        let mut pipelines = BTreeMap::new();
        for id in config.models.keys() {
            let pipeline = Pipeline::new(config.pipeline_config(id)?).with_context(|| format!("loading model {id}"))?;
            pipelines.insert(id.clone(), Arc::new(pipeline));
        }
        Ok(AppState { config, pipelines })
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct NerRequest {
    pub text: String,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEntity {
    pub surface: String,
    pub class: String,
    pub start: usize,
    pub end: usize,
    pub url: String,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiResponse {
    pub normalized: String,
    pub entities: Vec<ApiEntity>,
    pub model: String,
    pub ms: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("text has {chars} characters, the limit is {limit}")]
    TooLarge { chars: usize, limit: usize },
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("the request could not be processed")]
    Internal,
    #[error("the request timed out")]
    Timeout,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) | ApiError::UnknownModel(_) => StatusCode::BAD_REQUEST,
            ApiError::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::Internal => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Timeout => StatusCode::SERVICE_UNAVAILABLE,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "bad_request",
            ApiError::TooLarge { .. } => "too_large",
            ApiError::UnknownModel(_) => "unknown_model",
            ApiError::Internal => "internal",
            ApiError::Timeout => "timeout",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code(), "message": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

/// Runs one request synchronously. Pipeline failures are logged and reported
/// without detail.
pub fn handle_ner_request(state: &AppState, request: &NerRequest) -> Result<ApiResponse, ApiError> {
    let limit = state.config.request_limit;
    let chars = request.text.chars().count();
    if chars > limit {
        return Err(ApiError::TooLarge { chars, limit });
    }
    let pipeline = state
        .pipelines
        .get(&request.model)
        .ok_or_else(|| ApiError::UnknownModel(request.model.clone()))?;
    let result = pipeline.run(&request.text).map_err(|e| {
        log::error!("model {}: {e}", request.model);
        ApiError::Internal
    })?;
    let entities = result
        .spans
        .iter()
        .map(|span| {
            let url = wikipedia_link(&span.surface, &state.config.wikipedia_base)?;
            let color = class_color(&span.class, pipeline.inventory())?;
            Ok(ApiEntity {
                surface: span.surface.clone(),
                class: span.class.to_string(),
                start: span.char_start,
                end: span.char_end,
                url,
                color,
            })
        })
        .collect::<Result<Vec<_>, crate::links::LinkError>>()
        .map_err(|e| {
            log::error!("decorating spans: {e}");
            ApiError::Internal
        })?;
    Ok(ApiResponse {
        normalized: result.normalized,
        entities,
        model: result.model_id,
        ms: result.elapsed_ms,
    })
}

async fn ner(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<ApiResponse>, ApiError> {
    let request: NerRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))?;
    let timeout = Duration::from_millis(state.config.timeout_ms);
    let task = tokio::task::spawn_blocking(move || handle_ner_request(&state, &request));
    match tokio::time::timeout(timeout, task).await {
        Ok(Ok(result)) => result.map(Json),
        Ok(Err(join_error)) => {
            log::error!("request task failed: {join_error}");
            Err(ApiError::Internal)
        }
        Err(_) => Err(ApiError::Timeout),
    }
}

async fn models(State(state): State<Arc<AppState>>) -> Json<Vec<String>> {
    Json(state.pipelines.keys().cloned().collect())
}

async fn healthz() -> &'static str {
    "ok"
}

async fn not_found() -> Response {
    let body = serde_json::json!({ "error": "not_found", "message": "no such route" });
    (StatusCode::NOT_FOUND, Json(body)).into_response()
}

pub fn router(state: Arc<AppState>) -> Router {
    // worst case JSON escaping is 12 bytes per char (a surrogate pair)
    let body_limit = state.config.request_limit.saturating_mul(12).saturating_add(4096);
    Router::new()
        .route("/api/ner", post(ner))
        .route("/api/models", get(models))
        .route("/healthz", get(healthz))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(state: AppState) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(state.config.listen)
        .await
        .with_context(|| format!("binding {}", state.config.listen))?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
