//! JSON-over-HTTP session service for interactive clients.
//!
//! | method | path | body / result |
//! |---|---|---|
//! | POST | `/api/sessions` | `{selector?, m?, seed?}` → session |
//! | GET | `/api/sessions/{id}` | session |
//! | POST | `/api/sessions/{id}/answers` | `{question_id, answer: 0\|1}` or `{question_id, skip: true}` → step |
//! | GET | `/api/sessions/{id}/belief` | heatmap |
//! | GET | `/api/sessions/{id}/recommendations` | Type I and Type II lists |
//! | GET | `/api/meta/questions` | question list |
//! | GET | `/api/meta/selectors` | selector registry |
//!
//! Errors are `{code, message}` with status 400 (bad input, unknown
//! selector), 404 (unknown session or question), 409 (question already
//! answered or skipped) or 500.

mod config;
mod session;
mod store;

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

pub use config::{ServiceConfig, DEFAULT_TTL_SECS};
pub use session::{
    BeliefSummary, Clock, CreateSession, NextQuestion, Prediction, QuestionInfo, RecommendationView, Recommendations,
    RecommendedItem, SelectorsView, SessionService, SessionView, StepResult, SubmitAnswer,
};
pub use store::{SessionEvent, SessionRecord, SessionStore};

use crate::dataset::DataDir;
use crate::engine::{Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::latent::IdealModel;

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::UnknownSelector { .. } => (StatusCode::BAD_REQUEST, "unknown_selector"),
            Error::Input(_) => (StatusCode::BAD_REQUEST, "invalid_input"),
            Error::UnknownQuestion(_) => (StatusCode::NOT_FOUND, "unknown_question"),
            Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::AlreadyAnswered(_) => (StatusCode::CONFLICT, "conflict"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            log::error!("{e}");
        }
        Self {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

async fn blocking<T: Send + 'static>(
    svc: Arc<SessionService>,
    f: impl FnOnce(&SessionService) -> Result<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: e.to_string(),
        })?
        .map(Json)
        .map_err(ApiError::from)
}

fn bad_json(e: impl std::fmt::Display) -> ApiError {
    ApiError {
        status: StatusCode::BAD_REQUEST,
        code: "invalid_input",
        message: e.to_string(),
    }
}

async fn create_session(
    State(svc): State<Arc<SessionService>>,
    body: Option<Json<serde_json::Value>>,
) -> std::result::Result<(StatusCode, Json<SessionView>), ApiError> {
    let req: CreateSession = match body {
        Some(Json(v)) => serde_json::from_value(v).map_err(bad_json)?,
        None => CreateSession::default(),
    };
    let view = blocking(svc, move |s| s.create(req)).await?;
    Ok((StatusCode::CREATED, view))
}

async fn get_session(State(svc): State<Arc<SessionService>>, UrlPath(id): UrlPath<String>) -> ApiResult<SessionView> {
    blocking(svc, move |s| s.get(&id)).await
}

async fn submit_answer(
    State(svc): State<Arc<SessionService>>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<serde_json::Value>,
) -> ApiResult<StepResult> {
    let req: SubmitAnswer = serde_json::from_value(body).map_err(bad_json)?;
    blocking(svc, move |s| s.submit(&id, req)).await
}

async fn get_belief(
    State(svc): State<Arc<SessionService>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<crate::belief::BeliefExport> {
    blocking(svc, move |s| s.belief(&id)).await
}

async fn get_recommendations(
    State(svc): State<Arc<SessionService>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Recommendations> {
    blocking(svc, move |s| s.recommendations(&id)).await
}

async fn meta_questions(State(svc): State<Arc<SessionService>>) -> Json<Vec<QuestionInfo>> {
    Json(svc.questions().to_vec())
}

async fn meta_selectors(State(svc): State<Arc<SessionService>>) -> Json<SelectorsView> {
    Json(svc.selectors())
}

/// API routes, plus static files under `/` when `static_dir` is given.
pub fn router(svc: Arc<SessionService>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/answers", post(submit_answer))
        .route("/api/sessions/{id}/belief", get(get_belief))
        .route("/api/sessions/{id}/recommendations", get(get_recommendations))
        .route("/api/meta/questions", get(meta_questions))
        .route("/api/meta/selectors", get(meta_selectors))
        .with_state(svc);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Builds the service from a configuration: model file, data directory
/// with the candidate answers, and the session store.
pub fn build(config: &ServiceConfig) -> Result<SessionService> {
    let model_path = config
        .model
        .as_ref()
        .ok_or_else(|| Error::input("no model configured"))?;
    let data_path = config
        .data_dir
        .as_ref()
        .ok_or_else(|| Error::input("no data directory configured"))?;
    let model = IdealModel::load(model_path)?;
    let dir = DataDir::load(data_path)?;
    let engine_cfg = EngineConfig {
        resolution: config.resolution,
        recommendation_size: config.m,
        ..EngineConfig::default()
    };
    let engine = Engine::from_data_dir(model, &dir, engine_cfg)?;
    let texts: HashMap<String, String> = dir
        .questions
        .iter()
        .flatten()
        .map(|q| (q.id.clone(), q.text.clone()))
        .collect();
    let store = match &config.store {
        Some(path) => SessionStore::open(path)?,
        None => SessionStore::in_memory()?,
    };
    SessionService::new(
        Arc::new(engine),
        &texts,
        store,
        config.default_selector,
        config.m,
        config.session_ttl_secs,
    )
}

/// Serves until interrupted.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let svc = Arc::new(build(&config)?);
    let app = router(svc, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .map_err(|e| Error::io(&config.bind, e))?;
    log::info!("listening on {}", config.bind);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(&config.bind, e))
}
