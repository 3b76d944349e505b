//! HTTP session service.
//!
//! Mutations on one session are exclusive: a request that finds the session
//! busy fails with 409 instead of queueing. Reads of `/state` return the
//! snapshot published by the last completed mutation and never wait.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use gridpilot::bundled;
use gridpilot::world::ScenarioEvent;

use crate::error::ApiError;
use crate::session::{EventRequest, Session, Snapshot, StatePayload};
use crate::sources::ScenarioSource;

pub const DEFAULT_STRATEGY: &str = "Balance Efficiency and Safety";

struct Slot {
    session: Arc<tokio::sync::Mutex<Session>>,
    snapshot: RwLock<Arc<StatePayload>>,
}

impl Slot {
    fn new(session: Session) -> Self {
        let snapshot = RwLock::new(Arc::new(session.state()));
        Self {
            session: Arc::new(tokio::sync::Mutex::new(session)),
            snapshot,
        }
    }
}

/// Read-only access to a locked session.
pub struct SessionGuard(tokio::sync::OwnedMutexGuard<Session>);

impl std::ops::Deref for SessionGuard {
    type Target = Session;

    fn deref(&self) -> &Session {
        &self.0
    }
}

/// Restored session ids and the snapshot files that failed, with reasons.
pub type Restored = (Vec<String>, Vec<(PathBuf, String)>);

#[derive(Default)]
pub struct AppState {
    sessions: Mutex<HashMap<String, Arc<Slot>>>,
    state_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(state_dir: Option<PathBuf>) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            state_dir,
        }
    }

    /// Restores every `*.json` snapshot in the state directory. Returns the
    /// ids restored and the files that failed, with reasons.
    pub fn restore_sessions(&self) -> std::io::Result<Restored> {
        let Some(dir) = &self.state_dir else {
            return Ok((Vec::new(), Vec::new()));
        };
        std::fs::create_dir_all(dir)?;
        let mut restored = Vec::new();
        let mut failed = Vec::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let result = std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|text| serde_json::from_str::<Snapshot>(&text).map_err(|e| e.to_string()))
                .and_then(|snap| Session::restore(&snap).map_err(|e| e.message));
            match result {
                Ok(session) => {
                    let id = session.id().to_string();
                    self.sessions.lock().expect("session map lock").insert(id.clone(), Arc::new(Slot::new(session)));
                    restored.push(id);
                }
                Err(e) => failed.push((path, e)),
            }
        }
        Ok((restored, failed))
    }

    /// Takes the session's lock without waiting. While the guard lives,
    /// mutating requests on the session answer 409.
    pub fn try_hold(&self, id: &str) -> Result<SessionGuard, ApiError> {
        let slot = self.slot(id)?;
        let guard = slot.session.clone().try_lock_owned().map_err(|_| ApiError::conflict(id))?;
        Ok(SessionGuard(guard))
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn persist(&self, snapshot: &Snapshot) -> Result<(), ApiError> {
        let Some(dir) = &self.state_dir else { return Ok(()) };
        write_snapshot(dir, snapshot).map_err(|e| ApiError::internal(format!("persisting session: {e}")))
    }

    fn forget(&self, id: &str) {
        if let Some(dir) = &self.state_dir {
            let _ = std::fs::remove_file(dir.join(format!("{id}.json")));
        }
    }
}

fn write_snapshot(dir: &Path, snapshot: &Snapshot) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{}.json.tmp", snapshot.id));
    std::fs::write(&tmp, serde_json::to_vec_pretty(snapshot)?)?;
    std::fs::rename(tmp, dir.join(format!("{}.json", snapshot.id)))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let bytes: &[u8] = if body.is_empty() { b"{}" } else { body };
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

/// Runs `op` on the session under its exclusive lock, off the async
/// runtime, then publishes the new state snapshot and persists the journal
/// before releasing the lock.
async fn mutate<T, F>(state: Arc<AppState>, id: String, op: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, ApiError> + Send + 'static,
{
    let slot = state.slot(&id)?;
    let mut guard = slot.session.clone().try_lock_owned().map_err(|_| ApiError::conflict(&id))?;
    tokio::task::spawn_blocking(move || {
        let out = op(&mut guard);
        *slot.snapshot.write().expect("snapshot lock") = Arc::new(guard.state());
        state.persist(&guard.snapshot())?;
        out
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

#[derive(Debug, Deserialize)]
struct CreateRequest {
    scenario_name: Option<String>,
    scenario_text: Option<String>,
    #[serde(default = "default_strategy")]
    strategy: String,
    #[serde(default = "default_backend")]
    backend: String,
}

fn default_strategy() -> String {
    DEFAULT_STRATEGY.to_string()
}

fn default_backend() -> String {
    "rule".to_string()
}

#[derive(Debug, Serialize)]
struct Created {
    session_id: String,
    state: StatePayload,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let scenario = match (req.scenario_name, req.scenario_text) {
        (Some(name), None) => {
            let text = bundled::scenario_text(&name).ok_or_else(|| {
                ApiError::unprocessable(
                    "unknown_scenario",
                    format!("no bundled scenario {name:?}"),
                    json!({"available": bundled::SCENARIOS.iter().map(|(n, _)| *n).collect::<Vec<_>>()}),
                )
            })?;
            ScenarioSource { name, text: text.to_string() }
        }
        (None, Some(text)) => ScenarioSource { name: "inline".into(), text },
        _ => return Err(ApiError::bad_request("give exactly one of scenario_name and scenario_text")),
    };
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::create(id.clone(), scenario, &req.strategy, &req.backend)?;
    state.persist(&session.snapshot())?;
    let payload = session.state();
    state
        .sessions
        .lock()
        .expect("session map lock")
        .insert(id.clone(), Arc::new(Slot::new(session)));
    Ok((StatusCode::CREATED, Json(Created { session_id: id, state: payload })).into_response())
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let mut ids: Vec<String> = state.sessions.lock().expect("session map lock").keys().cloned().collect();
    ids.sort();
    Json(json!({ "sessions": ids }))
}

async fn get_state(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let snapshot = slot.snapshot.read().expect("snapshot lock").clone();
    Ok(Json(&*snapshot).into_response())
}

async fn get_log(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let text = slot.session.lock().await.log_jsonl();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

#[derive(Debug, Deserialize)]
struct InstructionRequest {
    text: String,
}

async fn post_instruction(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: InstructionRequest = parse_body(&body)?;
    let out = mutate(state, id, move |s| s.instruct(&req.text)).await?;
    Ok(Json(out).into_response())
}

#[derive(Debug, Deserialize)]
struct StepRequest {
    #[serde(default = "one")]
    ticks: u64,
}

fn one() -> u64 {
    1
}

async fn post_step(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: StepRequest = parse_body(&body)?;
    let out = mutate(state, id, move |s| s.step(req.ticks)).await?;
    Ok(Json(out).into_response())
}

async fn post_event(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: EventRequest = parse_body(&body)?;
    let out = mutate(state, id, move |s| {
        let at_time = req.at_time.unwrap_or_else(|| s.episode().world().tick());
        s.event(ScenarioEvent { at_time, kind: req.event })
    })
    .await?;
    Ok(Json(out).into_response())
}

#[derive(Debug, Deserialize)]
struct StrategyRequest {
    strategy: String,
}

async fn post_strategy(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: StrategyRequest = parse_body(&body)?;
    let out = mutate(state, id, move |s| {
        s.set_strategy(&req.strategy)?;
        Ok(s.state())
    })
    .await?;
    Ok(Json(out).into_response())
}

async fn delete_session(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let _guard = slot.session.try_lock().map_err(|_| ApiError::conflict(&id))?;
    state.sessions.lock().expect("session map lock").remove(&id);
    state.forget(&id);
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn list_scenarios() -> Json<serde_json::Value> {
    Json(json!({ "scenarios": bundled::SCENARIOS.iter().map(|(n, _)| *n).collect::<Vec<_>>() }))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn no_route() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint", serde_json::Value::Null)
}

/// The API router. When `console_dir` exists, unmatched paths are served
/// from it.
pub fn router(state: Arc<AppState>, console_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/scenarios", get(list_scenarios))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/log", get(get_log))
        .route("/sessions/{id}/instruction", post(post_instruction))
        .route("/sessions/{id}/step", post(post_step))
        .route("/sessions/{id}/event", post(post_event))
        .route("/sessions/{id}/strategy", post(post_strategy))
        .with_state(state);
    match console_dir.filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(no_route),
    }
}

pub struct ServeConfig {
    pub addr: SocketAddr,
    pub state_dir: Option<PathBuf>,
    pub console_dir: Option<PathBuf>,
}

/// Binds and serves until interrupted.
pub async fn serve(config: ServeConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(config.state_dir.clone()));
    let (restored, failed) = state.restore_sessions()?;
    if !restored.is_empty() {
        eprintln!("restored {} session(s)", restored.len());
    }
    for (path, reason) in failed {
        eprintln!("skipping {}: {reason}", path.display());
    }
    let app = router(state, config.console_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
