use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use promoai_core::convert::View;
use promoai_core::llm::{generate, refine, Conversation, LlmError, PromptTemplates, Provider};
use promoai_core::pcl::Location;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;
use tower_http::trace::TraceLayer;

use crate::export::{export, Format};
use crate::session::Session;
use crate::store::{new_id, SessionStore};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub provider: Arc<dyn Provider>,
    pub templates: Arc<PromptTemplates>,
    pub max_iterations: usize,
    /// How long a request waits for another operation on the same session.
    pub lock_timeout: Duration,
}

/// Error body: `{kind, message, location?, session_id?}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: String,
    message: String,
    location: Option<Location>,
    session_id: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind: kind.to_string(),
            message: message.into(),
            location: None,
            session_id: None,
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", format!("no session with id `{id}`"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        tracing::error!(error = %e, "internal error");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }

    fn from_llm(e: &LlmError) -> Self {
        let status = match e {
            LlmError::EmptyDescription
            | LlmError::EmptyFeedback
            | LlmError::DescriptionTooLong { .. } => StatusCode::BAD_REQUEST,
            LlmError::GenerationExhausted { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            LlmError::Provider(_) => StatusCode::BAD_GATEWAY,
            LlmError::NoIterations => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut err = Self::new(status, e.kind(), e.to_string());
        if let LlmError::GenerationExhausted { last_location, .. } = e {
            err.location = *last_location;
        }
        err
    }

    fn with_session(mut self, id: &str) -> Self {
        self.session_id = Some(id.to_string());
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"kind": self.kind, "message": self.message});
        if let Some(loc) = self.location {
            body["location"] = json!({"line": loc.line, "column": loc.column});
        }
        if let Some(id) = self.session_id {
            body["session_id"] = json!(id);
        }
        (self.status, Json(body)).into_response()
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid-request", e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

#[derive(Deserialize)]
struct CreateRequest {
    description: String,
}

async fn create_session(
    State(state): State<AppState>,
    payload: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let description = body(payload)?.description;
    if description.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "precondition", "description is empty"));
    }
    let id = new_id();
    let st = state.clone();
    let desc = description.clone();
    let outcome = blocking(move || {
        generate(&st.templates, &desc, st.provider.as_ref(), st.max_iterations)
    })
    .await?;
    let (session, result) = match outcome {
        Ok(r) => {
            let mut s = Session::new(id.clone(), &description, Conversation::default());
            s.accept(r, None);
            (s, Ok(()))
        }
        Err(e) => {
            let LlmError::GenerationExhausted { attempts, conversation, .. } = &e else {
                return Err(ApiError::from_llm(&e));
            };
            let mut s = Session::new(id.clone(), &description, (**conversation).clone());
            s.fail(*attempts, None, e.to_string());
            (s, Err(ApiError::from_llm(&e).with_session(&id)))
        }
    };
    let store = state.store.clone();
    let saved = session.clone();
    blocking(move || store.save(&saved)).await?.map_err(ApiError::internal)?;
    tracing::info!(session = %id, ok = result.is_ok(), "session created");
    result?;
    Ok((StatusCode::CREATED, Json(session.summary())))
}

async fn load(state: &AppState, id: &str) -> Result<Session, ApiError> {
    let store = state.store.clone();
    let key = id.to_string();
    blocking(move || store.load(&key))
        .await?
        .map_err(ApiError::internal)?
        .ok_or_else(|| ApiError::not_found(id))
}

#[derive(Deserialize)]
struct FeedbackRequest {
    feedback: String,
}

async fn submit_feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<FeedbackRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let lock = state.store.lock(&id);
    let _guard = tokio::time::timeout(state.lock_timeout, lock.lock_owned())
        .await
        .map_err(|_| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "busy",
                "another operation on this session did not finish in time",
            )
        })?;
    let mut session = load(&state, &id).await?;
    let feedback = body(payload)?.feedback;
    let Some(current) = session.result() else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "no-model",
            "the session has no model to refine yet",
        ));
    };
    if feedback.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "precondition", "feedback is empty"));
    }
    let st = state.clone();
    let fb = feedback.clone();
    let outcome = blocking(move || {
        refine(&st.templates, &current, &fb, st.provider.as_ref(), st.max_iterations)
    })
    .await?;
    let result = match outcome {
        Ok(r) => {
            session.accept(r, Some(&feedback));
            Ok(())
        }
        Err(e) => {
            let attempts = match &e {
                LlmError::GenerationExhausted { attempts, .. } => *attempts,
                _ => 0,
            };
            session.fail(attempts, Some(&feedback), e.to_string());
            Err(ApiError::from_llm(&e).with_session(&id))
        }
    };
    let store = state.store.clone();
    let saved = session.clone();
    blocking(move || store.save(&saved)).await?.map_err(ApiError::internal)?;
    tracing::info!(session = %id, ok = result.is_ok(), "feedback processed");
    result?;
    Ok(Json(session.summary()))
}

#[derive(Deserialize)]
struct ModelQuery {
    format: Option<String>,
    view: Option<String>,
}

async fn get_model(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ModelQuery>,
) -> Result<Response, ApiError> {
    let bad = |kind: &str, m: String| ApiError::new(StatusCode::BAD_REQUEST, kind, m);
    let format: Format = q
        .format
        .as_deref()
        .unwrap_or("powl-json")
        .parse()
        .map_err(|m| bad("unknown-format", m))?;
    let view: View = q.view.as_deref().unwrap_or("bpmn").parse().map_err(|m| bad("unknown-view", m))?;
    let session = load(&state, &id).await?;
    let Some(model) = session.current_model else {
        return Err(ApiError::new(StatusCode::CONFLICT, "no-model", "the session has no model yet"));
    };
    let text = export(&model, format, view).map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, format.content_type())], text).into_response())
}

#[derive(Deserialize)]
struct HistoryQuery {
    #[serde(default)]
    include_conversation: bool,
}

async fn get_history(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HistoryQuery>,
) -> Result<Json<Value>, ApiError> {
    let session = load(&state, &id).await?;
    let mut out = json!({"id": session.id, "events": session.history});
    if q.include_conversation {
        out["conversation"] = json!(session.conversation.messages());
        out["iteration_count"] = json!(session.conversation.iteration_count);
    }
    Ok(Json(out))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    Ok(Json(load(&state, &id).await?.summary()))
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such endpoint")
}

pub fn router(state: AppState, cors_origins: &[String]) -> Router {
    let mut app = Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/feedback", post(submit_feedback))
        .route("/api/sessions/{id}/model", get(get_model))
        .route("/api/sessions/{id}/history", get(get_history))
        .fallback(fallback)
        .with_state(state)
        .layer(TraceLayer::new_for_http());
    let origins: Vec<HeaderValue> = cors_origins.iter().filter_map(|o| o.parse().ok()).collect();
    if !origins.is_empty() {
        app = app.layer(
            CorsLayer::new()
                .allow_origin(origins)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    app
}

impl AppState {
    pub fn from_config(cfg: &crate::config::AppConfig) -> anyhow::Result<Self> {
        Ok(AppState {
            store: Arc::new(SessionStore::open(&cfg.store_dir)?),
            provider: cfg.provider.build()?,
            templates: Arc::new(cfg.templates()?),
            max_iterations: cfg.max_iterations,
            lock_timeout: cfg.request_timeout(),
        })
    }
}

/// Binds `cfg.listen`, prints `listening on http://<addr>` to stdout and
/// serves until `shutdown` resolves.
pub async fn serve(
    cfg: crate::config::AppConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let state = AppState::from_config(&cfg)?;
    let listener = tokio::net::TcpListener::bind(&cfg.listen).await?;
    let addr = listener.local_addr()?;
    println!("listening on http://{addr}");
    tracing::info!(%addr, store = %cfg.store_dir.display(), "service started");
    axum::serve(listener, router(state, &cfg.cors_origins))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}
