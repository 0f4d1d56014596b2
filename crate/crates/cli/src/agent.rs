//! Agent-driven signals. The CLI hosts the episode service in-process and,
//! for every decision day, opens an episode and hands it to the agent:
//!
//! ```text
//! POST <agent-url>  {"service_url", "episode_id", "symbol", "date"}
//! ```
//!
//! The agent drives the episode through the service and submits a decision
//! before answering. An episode left without a decision counts as HOLD.

use std::sync::Arc;
use std::time::Duration;

use chrono::NaiveDate;
use quantgym::{Corpus, Decision, Trajectory};
use quantgym_service::{AppState, OpenResponse, ServiceConfig};
use reqwest::StatusCode;
use serde_json::json;

use crate::error::{CliError, Result};

pub struct AgentRunner {
    runtime: tokio::runtime::Runtime,
    client: reqwest::Client,
    service_url: String,
    agent_url: String,
}

impl AgentRunner {
    pub fn start(corpus: Arc<Corpus>, config: ServiceConfig, agent_url: &str, timeout: Duration) -> Result<Self> {
        let runtime = tokio::runtime::Runtime::new().map_err(CliError::input)?;
        let state = AppState::new(corpus, config);
        let addr = runtime
            .block_on(async {
                let (addr, server) = quantgym_service::bind(([127, 0, 0, 1], 0).into(), state).await?;
                tokio::spawn(server);
                Ok::<_, std::io::Error>(addr)
            })
            .map_err(|e| CliError::Input(format!("cannot start episode service: {e}")))?;
        let client = reqwest::Client::builder().timeout(timeout).build().map_err(CliError::input)?;
        Ok(Self { runtime, client, service_url: format!("http://{addr}"), agent_url: agent_url.to_string() })
    }

    pub fn decide(&self, symbol: &str, date: NaiveDate) -> Result<Decision> {
        self.runtime.block_on(self.decide_async(symbol, date))
    }

    async fn decide_async(&self, symbol: &str, date: NaiveDate) -> Result<Decision> {
        let service = |e: reqwest::Error| CliError::Input(format!("episode service: {e}"));
        let opened: OpenResponse = self
            .client
            .post(format!("{}/episodes", self.service_url))
            .json(&json!({"symbol": symbol, "date": date}))
            .send()
            .await
            .map_err(service)?
            .error_for_status()
            .map_err(service)?
            .json()
            .await
            .map_err(service)?;
        let id = opened.episode_id;

        let unreachable = |reason: String| CliError::AgentUnreachable { url: self.agent_url.clone(), reason };
        let resp = self
            .client
            .post(&self.agent_url)
            .json(&json!({"service_url": self.service_url, "episode_id": id, "symbol": symbol, "date": date}))
            .send()
            .await
            .map_err(|e| unreachable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unreachable(format!("answered {}", resp.status())));
        }

        let resp = self
            .client
            .get(format!("{}/episodes/{id}/trajectory", self.service_url))
            .send()
            .await
            .map_err(service)?;
        match resp.status() {
            StatusCode::OK => {
                let text = resp.text().await.map_err(service)?;
                Ok(Trajectory::from_jsonl(&text)?.decision())
            }
            status => {
                eprintln!("warning: {symbol} {date}: no decision from agent ({status}); using HOLD");
                Ok(Decision::Hold)
            }
        }
    }
}
