//! HTTP service that runs experiment sessions.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/api/session` | `{"kind": "exp1"}` | [`CreateResponse`] |
//! | GET | `/api/session/{id}/next` | | [`NextPayload`] |
//! | POST | `/api/session/{id}/response` | [`ResponseRequest`] | [`SubmitResponse`] |
//! | POST | `/api/session/{id}/survey` | [`SurveyRequest`] | [`SurveyResponse`] |
//! | GET | `/api/export?kind=exp1` | | sessions, one JSON object per line |
//! | GET | `/api/health` | | `{"status": "ok"}` |
//!
//! Anything else is served from the static directory when one is
//! configured. Errors carry `{"error": code, "message": text}` with status
//! 400 (bad request), 404 (unknown session), 409 (out of order or finished
//! session) or 503 (session limit reached).
//!
//! Session state is never held outside the store: each request replays the
//! session's records against its spec.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use instrlearn_core::grammar::{ColorSymbol, Instruction, OutputSeq};
use instrlearn_core::protocol::{
    ExperimentKind, ExperimentSpec, Feedback, Phase, ProtocolError, SessionRunner, SESSION_SCHEMA_VERSION,
};
use instrlearn_core::rng::derive_seed;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::{Error, Result};
use crate::store::{Event, SessionStore};

/// Overrides [`ServerConfig::data_dir`].
pub const DATA_DIR_ENV: &str = "INSTRLEARN_DATA_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Every session runs the spec generated from this seed.
    Fixed(u64),
    /// Every session gets a freshly drawn seed.
    PerSession,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    pub seed_policy: SeedPolicy,
    pub data_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    pub max_sessions: usize,
    /// Flush each log line to disk before acknowledging.
    pub sync_writes: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1:8080".into(),
            seed_policy: SeedPolicy::PerSession,
            data_dir: PathBuf::from("data"),
            static_dir: None,
            max_sessions: 10_000,
            sync_writes: true,
        }
    }
}

impl ServerConfig {
    /// Reads a JSON config and applies the environment override.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ServerConfig = crate::io::read_json(path)?;
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|d| !d.is_empty()) {
            self.data_dir = dir.into();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let addr: SocketAddr = self
            .bind
            .parse()
            .map_err(|_| Error::Format(format!("invalid bind address `{}`", self.bind)))?;
        if addr.port() == 0 {
            return Err(Error::Format("bind port must be nonzero".into()));
        }
        if self.max_sessions == 0 {
            return Err(Error::Format("max_sessions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApiError {
    BadRequest(String),
    UnknownSession(String),
    Conflict(String),
    CapacityExceeded,
    Internal(String),
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::CapacityExceeded => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn body(&self) -> ErrorBody {
        let (code, message) = match self {
            ApiError::BadRequest(m) => ("bad_request", m.clone()),
            ApiError::UnknownSession(id) => ("unknown_session", format!("no session `{id}`")),
            ApiError::Conflict(m) => ("out_of_order", m.clone()),
            ApiError::CapacityExceeded => ("capacity_exceeded", "session limit reached".into()),
            ApiError::Internal(m) => ("internal", m.clone()),
        };
        ErrorBody {
            error: code.into(),
            message,
        }
    }
}

impl From<ProtocolError> for ApiError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::OutOfOrder { .. } | ProtocolError::SessionComplete(_) => ApiError::Conflict(e.to_string()),
            ProtocolError::UnknownKind(_) => ApiError::BadRequest(e.to_string()),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateRequest {
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub schema_version: u32,
    pub session_id: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub next: NextPayload,
}

/// A study line shown for reference; `output` is hidden for the item being
/// quizzed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyView {
    pub item_id: String,
    pub instruction: Instruction,
    pub output: Option<OutputSeq>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormItem {
    pub item_id: String,
    pub instruction: Instruction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemPayload {
    pub session_id: String,
    pub item_id: String,
    pub phase: Phase,
    pub cycle: u32,
    pub block: Option<usize>,
    pub n_blocks: usize,
    pub stage: Option<String>,
    /// Absent during the interface practice.
    pub instruction: Option<Instruction>,
    /// The sequence to copy during the interface practice.
    pub practice_target: Option<OutputSeq>,
    pub pool: Vec<ColorSymbol>,
    pub study: Vec<StudyView>,
    /// Every item of a free-form block, for single-page entry; empty
    /// otherwise.
    pub form: Vec<FormItem>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextPayload {
    Pending(ItemPayload),
    Done { session_id: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResponseRequest {
    pub item_id: String,
    pub symbols: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub accepted: bool,
    pub item_id: String,
    pub phase: Phase,
    /// Present only during practice and the study quiz.
    pub feedback: Option<Feedback>,
    pub done: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurveyRequest {
    pub external_aid: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct ExportQuery {
    pub kind: Option<String>,
}

struct Inner {
    store: SessionStore,
    specs: HashMap<(ExperimentKind, u64), Arc<ExperimentSpec>>,
    entropy: u64,
}

impl Inner {
    fn spec(&mut self, kind: ExperimentKind, seed: u64) -> Arc<ExperimentSpec> {
        self.specs
            .entry((kind, seed))
            .or_insert_with(|| Arc::new(ExperimentSpec::generate(kind, seed)))
            .clone()
    }

    fn runner_parts(&mut self, id: &str) -> std::result::Result<(Arc<ExperimentSpec>, instrlearn_core::protocol::Session), ApiError> {
        let session = self
            .store
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.into()))?;
        Ok((self.spec(session.kind, session.seed), session))
    }
}

pub struct AppState {
    config: ServerConfig,
    inner: Mutex<Inner>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn practice_pool(spec: &ExperimentSpec) -> Vec<ColorSymbol> {
    let mut pool: Vec<ColorSymbol> = spec.blocks.first().map(|b| b.pool.clone()).unwrap_or_default();
    for c in spec.practice.symbols() {
        if !pool.contains(c) {
            pool.push(*c);
        }
    }
    pool
}

fn payload(spec: &ExperimentSpec, runner: &SessionRunner<'_>, session_id: &str) -> NextPayload {
    let Some(p) = runner.pending() else {
        return NextPayload::Done {
            session_id: session_id.into(),
        };
    };
    let mut out = ItemPayload {
        session_id: session_id.into(),
        item_id: p.item_id.clone(),
        phase: p.phase,
        cycle: p.cycle,
        block: p.block,
        n_blocks: spec.blocks.len(),
        stage: None,
        instruction: None,
        practice_target: None,
        pool: Vec::new(),
        study: Vec::new(),
        form: Vec::new(),
    };
    match p.block {
        None => {
            out.practice_target = Some(spec.practice.clone());
            out.pool = practice_pool(spec);
        }
        Some(b) => {
            let block = &spec.blocks[b];
            out.stage = Some(block.kind.label());
            out.instruction = runner.pending_item().map(|i| i.instruction.clone());
            out.pool = block.pool.clone();
            out.study = block
                .study
                .iter()
                .map(|i| StudyView {
                    item_id: i.id.clone(),
                    instruction: i.instruction.clone(),
                    output: if p.phase == Phase::StudyQuiz && i.id == p.item_id {
                        None
                    } else {
                        i.target.clone()
                    },
                })
                .collect();
            if block.kind == instrlearn_core::protocol::BlockKind::FreeForm {
                out.form = block
                    .test
                    .iter()
                    .map(|i| FormItem {
                        item_id: i.id.clone(),
                        instruction: i.instruction.clone(),
                    })
                    .collect();
            }
        }
    }
    NextPayload::Pending(out)
}

impl AppState {
    pub fn new(config: ServerConfig) -> Result<Self> {
        config.validate()?;
        let mut store = SessionStore::open(&config.data_dir)?;
        store.set_sync(config.sync_writes);
        let entropy = now_ms() ^ u64::from(std::process::id()).rotate_left(32);
        Ok(AppState {
            config,
            inner: Mutex::new(Inner {
                store,
                specs: HashMap::new(),
                entropy,
            }),
        })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn create_session(&self, kind: &str) -> std::result::Result<CreateResponse, ApiError> {
        let kind: ExperimentKind = kind.parse()?;
        let mut inner = self.lock();
        let n = inner.store.len();
        if n >= self.config.max_sessions {
            return Err(ApiError::CapacityExceeded);
        }
        let seed = match self.config.seed_policy {
            SeedPolicy::Fixed(s) => s,
            SeedPolicy::PerSession => derive_seed(inner.entropy, n as u64),
        };
        let session_id = format!("s{:06}", n + 1);
        inner.store.append(Event::Created {
            session_id: session_id.clone(),
            kind,
            seed,
        })?;
        let spec = inner.spec(kind, seed);
        let session = inner.store.get(&session_id).expect("just created").clone();
        let runner = SessionRunner::resume(&spec, &session)?;
        Ok(CreateResponse {
            schema_version: SESSION_SCHEMA_VERSION,
            next: payload(&spec, &runner, &session_id),
            session_id,
            kind,
            seed,
        })
    }

    pub fn next(&self, id: &str) -> std::result::Result<NextPayload, ApiError> {
        let (spec, session) = self.lock().runner_parts(id)?;
        let runner = SessionRunner::resume(&spec, &session)?;
        Ok(payload(&spec, &runner, id))
    }

    pub fn submit(&self, id: &str, req: &ResponseRequest) -> std::result::Result<SubmitResponse, ApiError> {
        let response = OutputSeq(
            req.symbols
                .iter()
                .map(|s| s.parse::<ColorSymbol>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| ApiError::BadRequest(e.to_string()))?,
        );
        let mut inner = self.lock();
        let (spec, session) = inner.runner_parts(id)?;
        let mut runner = SessionRunner::resume(&spec, &session)?;
        if let NextPayload::Pending(p) = payload(&spec, &runner, id) {
            if p.item_id == req.item_id {
                if let Some(c) = response.symbols().iter().find(|c| !p.pool.contains(c)) {
                    return Err(ApiError::BadRequest(format!("{c} is not in the response pool")));
                }
            }
        }
        let timestamp = now_ms().max(session.records.last().map_or(0, |r| r.timestamp));
        let sub = runner.submit(&req.item_id, response, timestamp)?;
        inner.store.append(Event::Response {
            session_id: id.into(),
            record: sub.record.clone(),
        })?;
        Ok(SubmitResponse {
            accepted: true,
            item_id: sub.record.item_id,
            phase: sub.record.phase,
            feedback: sub.feedback,
            done: runner.is_done(),
        })
    }

    pub fn survey(&self, id: &str, req: &SurveyRequest) -> std::result::Result<SurveyResponse, ApiError> {
        let mut inner = self.lock();
        if inner.store.get(id).is_none() {
            return Err(ApiError::UnknownSession(id.into()));
        }
        inner.store.append(Event::Survey {
            session_id: id.into(),
            external_aid: req.external_aid,
        })?;
        Ok(SurveyResponse { accepted: true })
    }

    pub fn export(&self, kind: Option<&str>) -> std::result::Result<String, ApiError> {
        let kind = kind.map(str::parse::<ExperimentKind>).transpose()?;
        Ok(self.lock().store.export(kind))
    }
}

type Shared = State<Arc<AppState>>;

async fn create(State(s): Shared, Json(req): Json<CreateRequest>) -> std::result::Result<impl IntoResponse, ApiError> {
    Ok((StatusCode::CREATED, Json(s.create_session(&req.kind)?)))
}

async fn next(State(s): Shared, UrlPath(id): UrlPath<String>) -> std::result::Result<Json<NextPayload>, ApiError> {
    s.next(&id).map(Json)
}

async fn respond(
    State(s): Shared,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ResponseRequest>,
) -> std::result::Result<Json<SubmitResponse>, ApiError> {
    s.submit(&id, &req).map(Json)
}

async fn survey(
    State(s): Shared,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<SurveyRequest>,
) -> std::result::Result<Json<SurveyResponse>, ApiError> {
    s.survey(&id, &req).map(Json)
}

async fn export(State(s): Shared, Query(q): Query<ExportQuery>) -> std::result::Result<Response, ApiError> {
    let body = s.export(q.kind.as_deref())?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/api/session", post(create))
        .route("/api/session/{id}/next", get(next))
        .route("/api/session/{id}/response", post(respond))
        .route("/api/session/{id}/survey", post(survey))
        .route("/api/export", get(export))
        .route("/api/health", get(health))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until interrupted.
pub async fn serve(config: ServerConfig) -> Result<()> {
    let addr = config.bind.clone();
    let state = Arc::new(AppState::new(config)?);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| Error::io(addr.clone(), e))?;
    eprintln!("listening on http://{addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr, e))
}
