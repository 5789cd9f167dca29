//! HTTP+JSON annotation service.
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | `POST` | `/sessions` | [`CreateSession`] | `201` [`SessionView`] |
//! | `GET` | `/sessions` | | `{"sessions": [SessionView]}` |
//! | `GET` | `/sessions/{id}` | | [`SessionView`] |
//! | `GET` | `/sessions/{id}/items` | `?n=10` | [`ItemsView`] |
//! | `POST` | `/sessions/{id}/verdicts` | [`VerdictRequest`] | [`VerdictAck`] |
//! | `GET` | `/sessions/{id}/export` | | [`ExportView`] |
//! | `GET` | `/sessions/{id}/stats` | | [`SessionStats`] |
//!
//! Errors are `{"error": {"code": ..., "message": ...}}` with codes
//! `not_found` (404), `unauthorized` (401), `usage_error` (409),
//! `invalid_request`, `invalid_verdict`, `key_not_in_queue` (422) and
//! `internal` (500).
//!
//! Every session is an append-only event log in the session directory, so a
//! restarted service resumes with the same queues and cursors.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use relsimp_core::clustering::Clustering;
use relsimp_core::pairgen::{generate_pairs, summarize, write_ndjson, GenerationSummary};
use relsimp_core::ranking::{
    build_annotation_queue, ExampleSentence, QueueParams, RankingError, SimplificationMetrics, Thresholds,
};
use relsimp_core::session::{
    LoggedVerdict, Session, SessionError, SessionEvent, SessionParams, SessionStats, SessionStore, Workflow,
};
use relsimp_core::{EntityPair, LabelledPairs, PairIndex, Verdict, VerdictValue};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(Utc::now)
}

/// Read-only pipeline artifacts the service works from.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub index: PairIndex,
    /// Training-split labels; required by the expert-with-labels workflow.
    pub labels: Option<LabelledPairs>,
    pub clustering: Option<Clustering>,
    /// Seed positives used to flag generated pairs as novel.
    pub seed_positives: BTreeSet<EntityPair>,
    /// Expand accepted keys to their clusters on export.
    pub expand_clusters: bool,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// When set, every request needs `Authorization: Bearer <token>`.
    pub token: Option<String>,
    pub default_annotator: String,
    pub session_dir: PathBuf,
    pub export_dir: PathBuf,
}

impl ServiceConfig {
    pub fn new(session_dir: impl Into<PathBuf>, export_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            token: None,
            default_annotator: "expert".into(),
            session_dir: session_dir.into(),
            export_dir: export_dir.into(),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no session {id:?}"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::KeyNotInQueue(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "key_not_in_queue", e.to_string()),
            other => ApiError::internal(other),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub workflow: Workflow,
    pub session_size: usize,
    pub examples_per_item: usize,
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub workflow: Workflow,
    pub params: SessionParams,
    pub stats: SessionStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    /// Zero-based queue position.
    pub position: usize,
    pub key: String,
    pub display: String,
    pub pair_count: usize,
    pub cluster_id: Option<usize>,
    pub metrics: Option<SimplificationMetrics>,
    pub examples: Vec<ExampleSentence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemsView {
    pub session: String,
    pub cursor: usize,
    pub items: Vec<ItemView>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRequest {
    pub key: String,
    pub value: String,
    #[serde(default)]
    pub annotator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictAck {
    pub key: String,
    pub value: VerdictValue,
    pub cursor: usize,
    pub annotated: usize,
    pub msp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportView {
    pub session: String,
    /// File names inside the export directory.
    pub verdict_file: String,
    pub pair_file: String,
    pub verdicts: usize,
    pub accepted_keys: Vec<String>,
    pub summary: GenerationSummary,
}

#[derive(Debug, Deserialize)]
struct ItemsQuery {
    n: Option<usize>,
}

pub struct AppState {
    workspace: Workspace,
    store: SessionStore,
    config: ServiceConfig,
    clock: Clock,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
}

fn view(s: &Session) -> SessionView {
    SessionView { id: s.id.clone(), workflow: s.workflow, params: s.params.clone(), stats: s.stats() }
}

impl AppState {
    /// Opens the session store and replays every existing session.
    pub fn open(workspace: Workspace, config: ServiceConfig, clock: Clock) -> Result<Self, SessionError> {
        let store = SessionStore::open(&config.session_dir)?;
        fs::create_dir_all(&config.export_dir)
            .map_err(|source| SessionError::Io { path: config.export_dir.display().to_string(), source })?;
        let sessions = store.load_all()?.into_iter().map(|s| (s.id.clone(), Arc::new(Mutex::new(s)))).collect();
        Ok(AppState { workspace, store, config, clock, sessions: RwLock::new(sessions) })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.read().expect("session map lock").get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    pub fn create_session(&self, req: &CreateSession) -> Result<SessionView, ApiError> {
        let labels = match req.workflow {
            Workflow::ExpertNoLabels => None,
            Workflow::ExpertWithLabels => {
                let labels = self.workspace.labels.as_ref().ok_or_else(|| {
                    ApiError::new(
                        StatusCode::CONFLICT,
                        "usage_error",
                        "the expert_with_labels workflow needs a labels file; start the service with gold labels",
                    )
                })?;
                if req.thresholds.is_none() {
                    return Err(ApiError::invalid("the expert_with_labels workflow needs thresholds"));
                }
                Some(labels)
            }
        };
        // Holding the write lock serializes id allocation.
        let mut sessions = self.sessions.write().expect("session map lock");
        let mut annotated = BTreeSet::new();
        for s in sessions.values() {
            annotated.extend(s.lock().expect("session lock").annotated_keys().cloned());
        }
        let params = QueueParams {
            ordering: req.workflow.ordering(),
            thresholds: req.thresholds,
            session_size: req.session_size,
            examples_per_item: req.examples_per_item,
            seed: req.seed,
        };
        let queue =
            build_annotation_queue(&self.workspace.index, &params, labels, self.workspace.clustering.as_ref(), &annotated)
                .map_err(|e| match e {
                    RankingError::MissingLabels => ApiError::new(StatusCode::CONFLICT, "usage_error", e.to_string()),
                    other => ApiError::invalid(other.to_string()),
                })?;
        let next = sessions.keys().filter_map(|k| k.strip_prefix('s')?.parse::<usize>().ok()).max().unwrap_or(0) + 1;
        let id = format!("s{next:04}");
        let session = Session::new(
            id.clone(),
            req.workflow,
            SessionParams {
                session_size: req.session_size,
                examples_per_item: req.examples_per_item,
                thresholds: req.thresholds,
                seed: req.seed,
            },
            queue,
        );
        self.store.append(&id, &session.created_event())?;
        let out = view(&session);
        sessions.insert(id, Arc::new(Mutex::new(session)));
        Ok(out)
    }

    pub fn list_sessions(&self) -> Vec<SessionView> {
        self.sessions.read().expect("session map lock").values().map(|s| view(&s.lock().expect("session lock"))).collect()
    }

    pub fn get_session(&self, id: &str) -> Result<SessionView, ApiError> {
        let s = self.session(id)?;
        let s = s.lock().expect("session lock");
        Ok(view(&s))
    }

    pub fn next_items(&self, id: &str, n: usize) -> Result<ItemsView, ApiError> {
        let s = self.session(id)?;
        let s = s.lock().expect("session lock");
        let items = s
            .next_items(n)
            .into_iter()
            .map(|(position, q)| ItemView {
                position,
                key: q.key.clone(),
                display: q.examples.first().map_or_else(|| q.key.clone(), |e| e.display.clone()),
                pair_count: q.pair_count,
                cluster_id: q.cluster_id,
                metrics: q.metrics.clone(),
                examples: q.examples.clone(),
            })
            .collect();
        Ok(ItemsView { session: s.id.clone(), cursor: s.cursor, items })
    }

    pub fn submit_verdict(&self, id: &str, req: &VerdictRequest) -> Result<VerdictAck, ApiError> {
        let value: VerdictValue =
            req.value.parse().map_err(|e: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_verdict", e))?;
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock");
        if !s.queue.iter().any(|q| q.key == req.key) {
            return Err(SessionError::KeyNotInQueue(req.key.clone()).into());
        }
        let verdict = Verdict {
            value,
            annotator: req.annotator.clone().unwrap_or_else(|| self.config.default_annotator.clone()),
            timestamp: (self.clock)(),
        };
        // Persist first so memory never runs ahead of the log.
        self.store.append(&s.id, &SessionEvent::Verdict { key: req.key.clone(), verdict: verdict.clone() })?;
        s.submit(&req.key, verdict)?;
        Ok(VerdictAck { key: req.key.clone(), value, cursor: s.cursor, annotated: s.stats().annotated, msp: s.msp() })
    }

    pub fn stats(&self, id: &str) -> Result<SessionStats, ApiError> {
        let s = self.session(id)?;
        let s = s.lock().expect("session lock");
        Ok(s.stats())
    }

    /// Writes `<id>.verdicts.ndjson` (full log) and `<id>.pairs.ndjson`
    /// (pairs generated from the Yes keys) into the export directory.
    pub fn export(&self, id: &str) -> Result<ExportView, ApiError> {
        let s = self.session(id)?;
        let (log, accepted): (Vec<LoggedVerdict>, BTreeSet<String>) = {
            let s = s.lock().expect("session lock");
            (s.log.clone(), s.accepted_keys())
        };
        let expansion = self.workspace.clustering.as_ref().filter(|_| self.workspace.expand_clusters);
        let pairs = generate_pairs(&self.workspace.index, &accepted, &self.workspace.seed_positives, expansion)
            .map_err(ApiError::internal)?;
        let used_keys = pairs.iter().flat_map(|g| g.supporting_keys.iter()).collect::<BTreeSet<_>>().len();

        let verdict_file = format!("{id}.verdicts.ndjson");
        let pair_file = format!("{id}.pairs.ndjson");
        let mut verdict_bytes = Vec::new();
        for v in &log {
            verdict_bytes.extend(serde_json::to_vec(v).map_err(ApiError::internal)?);
            verdict_bytes.push(b'\n');
        }
        let mut pair_bytes = Vec::new();
        write_ndjson(&pairs, &mut pair_bytes).map_err(ApiError::internal)?;
        fs::write(self.config.export_dir.join(&verdict_file), verdict_bytes).map_err(ApiError::internal)?;
        fs::write(self.config.export_dir.join(&pair_file), pair_bytes).map_err(ApiError::internal)?;
        Ok(ExportView {
            session: id.to_string(),
            verdict_file,
            pair_file,
            verdicts: log.len(),
            accepted_keys: accepted.iter().cloned().collect(),
            summary: summarize(&accepted, used_keys, &pairs),
        })
    }
}

async fn require_token(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.config.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token").into_response();
        }
    }
    next.run(req).await
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(t)| t).map_err(|e| ApiError::invalid(e.body_text()))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req = body(payload)?;
    Ok((StatusCode::CREATED, Json(state.create_session(&req)?)))
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "sessions": state.list_sessions() }))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(state.get_session(&id)?))
}

async fn next_items(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<ItemsQuery>, QueryRejection>,
) -> Result<Json<ItemsView>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::invalid(e.body_text()))?;
    Ok(Json(state.next_items(&id, q.n.unwrap_or(10))?))
}

async fn submit_verdict(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<VerdictRequest>, JsonRejection>,
) -> Result<Json<VerdictAck>, ApiError> {
    let req = body(payload)?;
    Ok(Json(state.submit_verdict(&id, &req)?))
}

async fn export(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<ExportView>, ApiError> {
    Ok(Json(state.export(&id)?))
}

async fn stats(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionStats>, ApiError> {
    Ok(Json(state.stats(&id)?))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/items", get(next_items))
        .route("/sessions/{id}/verdicts", post(submit_verdict))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/stats", get(stats))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
