//! JSON-over-HTTP front end for [`quantgym::Episode`].
//!
//! Routes:
//!
//! | method | path | body |
//! |---|---|---|
//! | `POST` | `/episodes` | `{symbol, date, max_tool_calls?}` |
//! | `POST` | `/episodes/{id}/tool` | `{name, arguments, reasoning?}` |
//! | `POST` | `/episodes/{id}/decision` | `{action, reasoning?}` |
//! | `GET` | `/episodes/{id}/trajectory` | |
//! | `GET` | `/health` | |
//!
//! Malformed tool calls answer 200 with the error text, as the agent would
//! see it in a transcript. `reasoning`, when present, is appended to the
//! episode before the call or decision it accompanies.

mod error;
mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use quantgym::env::EnvError;
use quantgym::reward::{score_trajectory, RewardError};
use quantgym::{Corpus, Decision, EpisodeConfig, RewardBreakdown, RewardConfig, ToolCall};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::net::TcpListener;

pub use error::ApiError;
use session::SessionTable;

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub reward: RewardConfig,
    pub idle_timeout: Duration,
    /// Finished trajectories are also written here as `<episode_id>.jsonl`.
    pub trajectory_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { reward: RewardConfig::default(), idle_timeout: DEFAULT_IDLE_TIMEOUT, trajectory_dir: None }
    }
}

#[derive(Clone)]
pub struct AppState {
    corpus: Arc<Corpus>,
    config: Arc<ServiceConfig>,
    sessions: Arc<SessionTable>,
}

impl AppState {
    pub fn new(corpus: Arc<Corpus>, config: ServiceConfig) -> Self {
        let sessions = Arc::new(SessionTable::new(config.idle_timeout));
        Self { corpus, config: Arc::new(config), sessions }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenRequest {
    pub symbol: String,
    pub date: NaiveDate,
    #[serde(default)]
    pub max_tool_calls: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OpenResponse {
    pub episode_id: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolRequest {
    pub name: String,
    #[serde(default)]
    pub arguments: Value,
    #[serde(default)]
    pub reasoning: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ToolResponse {
    pub response_text: String,
    pub malformed: bool,
    pub remaining_calls: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub action: Decision,
    #[serde(default)]
    pub reasoning: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub trajectory_ref: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/episodes", post(open_episode))
        .route("/episodes/{id}/tool", post(call_tool))
        .route("/episodes/{id}/decision", post(decide))
        .route("/episodes/{id}/trajectory", get(trajectory))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Binds `addr` and returns the bound address with the server future.
pub async fn bind(
    addr: SocketAddr,
    state: AppState,
) -> std::io::Result<(SocketAddr, impl std::future::Future<Output = std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((local, serve(listener, state)))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn open_episode(State(state): State<AppState>, body: Bytes) -> Result<Json<OpenResponse>, ApiError> {
    let req: OpenRequest = parse_body(&body)?;
    let mut config = EpisodeConfig::new(req.symbol, req.date);
    if let Some(max) = req.max_tool_calls {
        config.max_tool_calls = max;
    }
    let episode = quantgym::Episode::open(state.corpus.clone(), config)?;
    let episode_id = state.sessions.insert(episode);
    Ok(Json(OpenResponse { episode_id }))
}

async fn call_tool(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ToolResponse>, ApiError> {
    let session = state.sessions.get(&id)?;
    let req: ToolRequest = parse_body(&body)?;
    let mut episode = session.lock().expect("session lock");
    if let Some(text) = req.reasoning {
        episode.append_reasoning(text)?;
    }
    let call = ToolCall::new(req.name, req.arguments);
    let (response_text, malformed) = match episode.execute_query(&call) {
        Ok(text) => (text, false),
        Err(e @ EnvError::MalformedArguments { .. }) => (e.agent_text(), true),
        Err(e) => return Err(e.into()),
    };
    Ok(Json(ToolResponse { response_text, malformed, remaining_calls: episode.remaining_calls() }))
}

async fn decide(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<DecisionResponse>, ApiError> {
    let session = state.sessions.get(&id)?;
    let req: DecisionRequest = parse_body(&body)?;
    let trajectory = {
        let mut episode = session.lock().expect("session lock");
        if let Some(text) = req.reasoning {
            episode.append_reasoning(text)?;
        }
        episode.submit_decision(req.action)?
    };
    let jsonl = trajectory.to_jsonl();
    if let Some(dir) = &state.config.trajectory_dir {
        write_atomic(dir.join(format!("{id}.jsonl")), &jsonl).await?;
    }
    state.sessions.store_trajectory(&id, jsonl);

    let series = state.corpus.series(&trajectory.symbol).expect("episode symbol exists");
    let (reward, reason) =
        match score_trajectory(&trajectory, series, state.corpus.price_field(), &state.config.reward) {
            Ok(b) => (Some(b), None),
            Err(RewardError::InsufficientFuture { .. }) => (None, Some("insufficient_future".to_string())),
            Err(e) => return Err(ApiError::Internal(e.to_string())),
        };
    Ok(Json(DecisionResponse { trajectory_ref: format!("/episodes/{id}/trajectory"), reward, reason }))
}

async fn trajectory(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let text = state.sessions.trajectory(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn write_atomic(path: PathBuf, contents: &str) -> Result<(), ApiError> {
    let tmp = path.with_extension("jsonl.tmp");
    let io = |e: std::io::Error| ApiError::Internal(format!("writing {}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        tokio::fs::create_dir_all(parent).await.map_err(io)?;
    }
    tokio::fs::write(&tmp, contents).await.map_err(io)?;
    tokio::fs::rename(&tmp, &path).await.map_err(io)
}

