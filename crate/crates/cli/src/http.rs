//! Axum routes over a [`QaService`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use stdqa_core::service::{ApiError, AskRequest, FeedbackRequest, QaService};
use tower_http::services::ServeDir;

/// An [`ApiError`] rendered as a JSON body with its HTTP status.
pub struct HttpError(pub ApiError);

impl From<ApiError> for HttpError {
    fn from(e: ApiError) -> Self {
        HttpError(e)
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0)).into_response()
    }
}

type HttpResult<T> = Result<Json<T>, HttpError>;

fn body(body: Result<Bytes, BytesRejection>) -> Result<Bytes, HttpError> {
    body.map_err(|rejection| {
        let status = rejection.status();
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "payload_too_large"
        } else {
            "parse_error"
        };
        HttpError(ApiError::new(status.as_u16(), code, rejection.body_text()))
    })
}

fn parse_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, HttpError> {
    serde_json::from_slice(bytes)
        .map_err(|e| HttpError(ApiError::new(400, "parse_error", e.to_string())))
}

/// Runs a handler off the async workers; scoring is CPU-bound.
async fn blocking<T, F>(f: F) -> HttpResult<T>
where
    T: Serialize + Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(result) => Ok(Json(result?)),
        Err(e) => Err(HttpError(ApiError::new(500, "internal", e.to_string()))),
    }
}

async fn ask(
    State(svc): State<Arc<QaService>>,
    raw: Result<Bytes, BytesRejection>,
) -> HttpResult<stdqa_core::service::AskResponse> {
    let req: AskRequest = parse_json(&body(raw)?)?;
    blocking(move || svc.handle_ask(&req)).await
}

async fn feedback(
    State(svc): State<Arc<QaService>>,
    raw: Result<Bytes, BytesRejection>,
) -> HttpResult<stdqa_core::service::FeedbackResponse> {
    let req: FeedbackRequest = parse_json(&body(raw)?)?;
    blocking(move || svc.handle_feedback(&req)).await
}

async fn import(
    State(svc): State<Arc<QaService>>,
    raw: Result<Bytes, BytesRejection>,
) -> HttpResult<stdqa_core::service::ImportResponse> {
    let bytes = body(raw)?;
    blocking(move || svc.handle_import(&bytes)).await
}

async fn health(State(svc): State<Arc<QaService>>) -> Json<stdqa_core::service::HealthResponse> {
    Json(svc.health())
}

async fn stats(State(svc): State<Arc<QaService>>) -> HttpResult<stdqa_core::kb::KbStats> {
    Ok(Json(svc.stats()?))
}

async fn not_found() -> HttpError {
    HttpError(ApiError::new(404, "not_found", "no such route"))
}

/// Builds the API router. Static assets from `static_dir` are served at `/`
/// when configured.
pub fn router(svc: Arc<QaService>) -> Router {
    let limit = svc.config().import_limit_bytes;
    let static_dir = svc.config().static_dir.clone();
    let api = Router::new()
        .route("/ask", post(ask))
        .route("/feedback", post(feedback))
        .route(
            "/kb/import",
            post(import).layer(DefaultBodyLimit::max(limit)),
        )
        .route("/health", get(health))
        .route("/kb/stats", get(stats))
        .with_state(svc);
    match static_dir {
        Some(dir) => {
            api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true))
        }
        None => api.fallback(not_found),
    }
}
