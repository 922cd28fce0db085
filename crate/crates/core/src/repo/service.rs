use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{Local, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{Mutex, Notify};

use super::store::{Clock, IngestOutcome, LogFilter, LogFormat, LogStore, StoreError, UploadMeta};
use crate::feedback::FeedbackEvent;
use crate::log::{LogError, TrialRecord};
use crate::session::{Session, SessionError, Snapshot, UserInput};
use crate::stats::{AnalysisOptions, ChanceLevel, GroupBy, ReportFormat, StatsError};
use crate::trial::{DisplayMode, GameConfig};

struct LiveSession {
    session: Mutex<Session>,
    notify: Notify,
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<LogStore>,
    clock: Clock,
    sessions: Arc<Mutex<HashMap<String, Arc<LiveSession>>>>,
}

impl AppState {
    pub fn new(store: LogStore, clock: Clock) -> Self {
        AppState { store: Arc::new(store), clock, sessions: Arc::default() }
    }

    pub fn store(&self) -> &LogStore {
        &self.store
    }

    fn now(&self) -> NaiveDateTime {
        (self.clock)().with_timezone(&Local).naive_local()
    }

    async fn live(&self, id: &str) -> Result<Arc<LiveSession>, ApiError> {
        self.sessions
            .lock()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown session `{id}`")))
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::Rejected(_) | StoreError::EmptyPayload | StoreError::UnknownFormat(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            StoreError::NoData(_) => StatusCode::NOT_FOUND,
            StoreError::Stats(_) => StatusCode::BAD_REQUEST,
            StoreError::Corrupt(_) | StoreError::Io(_) | StoreError::Json(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl From<StatsError> for ApiError {
    fn from(e: StatsError) -> Self {
        ApiError(StatusCode::BAD_REQUEST, e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::IllegalTransition { .. } => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(status, e.to_string())
    }
}

impl From<LogError> for ApiError {
    fn from(e: LogError) -> Self {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

fn bad_request(msg: impl ToString) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.to_string())
}

#[derive(Debug, Deserialize)]
struct UploadBody {
    subject: String,
    experimenter: String,
    device: String,
    format: String,
    content: String,
    /// Reserved for an upload token; ignored.
    #[serde(default)]
    #[allow(dead_code)]
    token: Option<String>,
}

async fn upload(State(state): State<AppState>, Json(body): Json<UploadBody>) -> Result<Json<IngestOutcome>, ApiError> {
    let format: LogFormat = body.format.parse()?;
    let meta = UploadMeta { subject: body.subject, experimenter: body.experimenter, device: body.device };
    let store = state.store.clone();
    let outcome = tokio::task::spawn_blocking(move || store.ingest(&body.content, format, &meta))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(outcome))
}

#[derive(Debug, Deserialize)]
struct LogsQuery {
    subject: Option<String>,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
    mode: Option<DisplayMode>,
}

async fn list_logs(State(state): State<AppState>, Query(q): Query<LogsQuery>) -> impl IntoResponse {
    let filter = LogFilter { subject: q.subject, from: q.from, to: q.to, mode: q.mode };
    Json(state.store.query(&filter))
}

fn rendered(format: ReportFormat, body: String) -> Response {
    let content_type = match format {
        ReportFormat::Markdown => "text/markdown; charset=utf-8",
        ReportFormat::Csv => "text/csv; charset=utf-8",
        ReportFormat::Json => "application/json",
    };
    ([(header::CONTENT_TYPE, content_type)], body).into_response()
}

#[derive(Debug, Deserialize)]
struct AccuracyQuery {
    subject: String,
    group_by: Option<String>,
    /// Comma separated list.
    set_size: Option<String>,
    format: Option<String>,
    #[serde(default)]
    exact_chance: bool,
    #[serde(default)]
    include_flagged: bool,
}

async fn accuracy_report(
    State(state): State<AppState>,
    Query(q): Query<AccuracyQuery>,
) -> Result<Response, ApiError> {
    let format: ReportFormat = q.format.as_deref().unwrap_or("md").parse()?;
    let group_by: GroupBy = match &q.group_by {
        Some(g) => g.parse()?,
        None => GroupBy::default(),
    };
    let set_sizes = match &q.set_size {
        Some(s) => Some(
            s.split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| bad_request(format!("bad set size `{x}`"))))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let options = AnalysisOptions {
        subject: Some(q.subject.clone()),
        group_by,
        set_sizes,
        chance: if q.exact_chance { ChanceLevel::Exact } else { ChanceLevel::Literal },
        include_flagged: q.include_flagged,
    };
    let store = state.store.clone();
    let body = tokio::task::spawn_blocking(move || store.report(&q.subject, &options, format))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(rendered(format, body))
}

#[derive(Debug, Deserialize)]
struct CorrelationQuery {
    subject: String,
    format: Option<String>,
}

async fn correlation(State(state): State<AppState>, Query(q): Query<CorrelationQuery>) -> Result<Response, ApiError> {
    let format: ReportFormat = q.format.as_deref().unwrap_or("csv").parse()?;
    let store = state.store.clone();
    let body = tokio::task::spawn_blocking(move || store.correlation(&q.subject, format))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(rendered(format, body))
}

#[derive(Debug, Default, Deserialize)]
struct NewSessionBody {
    #[serde(default)]
    config: GameConfig,
    learner: Option<String>,
    trainer: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct NewSessionReply {
    session_id: String,
    snapshot: Snapshot,
}

async fn new_session(
    State(state): State<AppState>,
    body: Option<Json<NewSessionBody>>,
) -> Result<Json<NewSessionReply>, ApiError> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    let learner = body.learner.as_deref().unwrap_or("Subject");
    let trainer = body.trainer.as_deref().unwrap_or("Experimenter");
    let session = match body.seed {
        Some(seed) => Session::new(body.config, learner, trainer, seed)?,
        None => Session::with_entropy(body.config, learner, trainer)?,
    };
    let snapshot = session.snapshot();
    let mut sessions = state.sessions.lock().await;
    let session_id = loop {
        let id = format!("{:016x}", rand::random::<u64>());
        if !sessions.contains_key(&id) {
            break id;
        }
    };
    sessions.insert(session_id.clone(), Arc::new(LiveSession { session: Mutex::new(session), notify: Notify::new() }));
    Ok(Json(NewSessionReply { session_id, snapshot }))
}

#[derive(Debug, Serialize)]
struct InputReply {
    events: Vec<FeedbackEvent>,
    record: Option<TrialRecord>,
    snapshot: Snapshot,
}

async fn session_input(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(input): Json<UserInput>,
) -> Result<Json<InputReply>, ApiError> {
    let live = state.live(&id).await?;
    let mut session = live.session.lock().await;
    let outcome = session.step(input, state.now())?;
    let snapshot = session.snapshot();
    drop(session);
    if !outcome.events.is_empty() {
        live.notify.notify_waiters();
    }
    Ok(Json(InputReply { events: outcome.events, record: outcome.record, snapshot }))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    wait_ms: Option<u64>,
}

/// Drains queued feedback events, optionally waiting up to `wait_ms` for one.
async fn session_events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Json<Vec<FeedbackEvent>>, ApiError> {
    let live = state.live(&id).await?;
    let wait = Duration::from_millis(q.wait_ms.unwrap_or(0).min(60_000));
    let notified = live.notify.notified();
    tokio::pin!(notified);
    notified.as_mut().enable();
    let events = live.session.lock().await.drain_events();
    if !events.is_empty() || wait.is_zero() {
        return Ok(Json(events));
    }
    let _ = tokio::time::timeout(wait, notified).await;
    let events = live.session.lock().await.drain_events();
    Ok(Json(events))
}

async fn session_log(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let live = state.live(&id).await?;
    let csv = live.session.lock().await.log_csv();
    let csv = csv?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/logs", post(upload).get(list_logs))
        .route("/api/v1/reports/accuracy", get(accuracy_report))
        .route("/api/v1/reports/correlation", get(correlation))
        .route("/api/v1/session", post(new_session))
        .route("/api/v1/session/{id}/input", post(session_input))
        .route("/api/v1/session/{id}/events", get(session_events))
        .route("/api/v1/session/{id}/log", get(session_log))
        .with_state(state)
}
