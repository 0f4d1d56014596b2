//! The trading-decision episode.
//!
//! An episode is opened for one `(symbol, trading day)`. The agent issues
//! query actions (tool calls) and free-text reasoning, then ends the episode
//! with exactly one [`Decision`]. Transitions are deterministic: the same
//! sequence of calls against the same corpus always yields byte-identical
//! responses.

mod tools;
mod trajectory;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::marketdata::Corpus;

pub use tools::{render_bar_table, sentiment_label, QueryAction, Tool, ToolCall};
pub use trajectory::{StepRecord, Trajectory, TrajectoryError, TrajectoryMetadata};

pub const DEFAULT_MAX_TOOL_CALLS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("{date} is not a trading day for {symbol}")]
    NotATradingDay { symbol: String, date: NaiveDate },
    #[error("max_tool_calls must be at least 1")]
    InvalidToolBudget,
    #[error("episode already terminated")]
    EpisodeTerminated,
    #[error("tool budget of {max} calls exhausted")]
    ToolBudgetExhausted { max: usize },
    #[error("malformed call to `{tool}`: {reason}")]
    MalformedArguments { tool: String, reason: String },
}

impl EnvError {
    /// In-band text shown to the agent for a malformed call.
    pub fn agent_text(&self) -> String {
        format!("Error: {self}")
    }
}

/// Terminal action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "BUY")]
    Buy,
    #[serde(rename = "SELL")]
    Sell,
    #[serde(rename = "HOLD")]
    Hold,
}

impl Decision {
    pub const ALL: [Decision; 3] = [Decision::Buy, Decision::Sell, Decision::Hold];

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Buy => "BUY",
            Decision::Sell => "SELL",
            Decision::Hold => "HOLD",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = String;

    /// Case-sensitive: only `BUY`, `SELL` and `HOLD` are accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Decision::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("action must be one of BUY, SELL, HOLD; got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub symbol: String,
    pub curr_date: NaiveDate,
    pub max_tool_calls: usize,
}

impl EpisodeConfig {
    pub fn new(symbol: impl Into<String>, curr_date: NaiveDate) -> Self {
        Self { symbol: symbol.into(), curr_date, max_tool_calls: DEFAULT_MAX_TOOL_CALLS }
    }
}

/// Live episode state.
#[derive(Debug, Clone)]
pub struct Episode {
    config: EpisodeConfig,
    corpus: Arc<Corpus>,
    query_history: Vec<QueryAction>,
    query_results: Vec<String>,
    reasoning_log: Vec<String>,
    records: Vec<StepRecord>,
    attempts: usize,
    final_action: Option<Decision>,
    hasher: Sha256,
}

impl Episode {
    pub fn open(corpus: Arc<Corpus>, config: EpisodeConfig) -> Result<Self, EnvError> {
        if config.max_tool_calls == 0 {
            return Err(EnvError::InvalidToolBudget);
        }
        let series = corpus
            .series(&config.symbol)
            .ok_or_else(|| EnvError::UnknownSymbol(config.symbol.clone()))?;
        let weekend = matches!(config.curr_date.weekday(), Weekday::Sat | Weekday::Sun);
        if weekend || series.index_of(config.curr_date).is_none() {
            return Err(EnvError::NotATradingDay { symbol: config.symbol.clone(), date: config.curr_date });
        }
        let mut hasher = Sha256::new();
        hasher.update(config.symbol.as_bytes());
        hasher.update(config.curr_date.to_string().as_bytes());
        Ok(Self {
            config,
            corpus,
            query_history: Vec::new(),
            query_results: Vec::new(),
            reasoning_log: Vec::new(),
            records: Vec::new(),
            attempts: 0,
            final_action: None,
            hasher,
        })
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn query_history(&self) -> &[QueryAction] {
        &self.query_history
    }

    pub fn query_results(&self) -> &[String] {
        &self.query_results
    }

    pub fn reasoning_log(&self) -> &[String] {
        &self.reasoning_log
    }

    pub fn is_terminated(&self) -> bool {
        self.final_action.is_some()
    }

    pub fn final_action(&self) -> Option<Decision> {
        self.final_action
    }

    pub fn malformed_calls(&self) -> usize {
        self.attempts - self.query_history.len()
    }

    /// Calls left before the budget is exhausted. Malformed calls count.
    pub fn remaining_calls(&self) -> usize {
        self.config.max_tool_calls.saturating_sub(self.attempts)
    }

    /// Short hex digest of the information state (context, queries, results).
    pub fn state_digest(&self) -> String {
        let bytes = self.hasher.clone().finalize();
        bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn next_step(&self) -> usize {
        self.records.len()
    }

    /// Runs one query. Malformed calls are recorded and counted, and the
    /// episode stays open.
    pub fn execute_query(&mut self, call: &ToolCall) -> Result<String, EnvError> {
        if self.is_terminated() {
            return Err(EnvError::EpisodeTerminated);
        }
        if self.attempts >= self.config.max_tool_calls {
            return Err(EnvError::ToolBudgetExhausted { max: self.config.max_tool_calls });
        }
        self.attempts += 1;
        let state = self.state_digest();
        let step = self.next_step();

        match QueryAction::parse(call, &self.corpus, self.config.curr_date) {
            Ok(action) => {
                let response = action.respond(&self.corpus);
                self.hasher.update(call.name.as_bytes());
                self.hasher.update(call.arguments.to_string().as_bytes());
                self.hasher.update(response.as_bytes());
                self.records.push(StepRecord::Query {
                    step,
                    tool: call.name.clone(),
                    arguments: call.arguments.clone(),
                    response: response.clone(),
                    malformed: false,
                    state,
                });
                self.query_history.push(action);
                self.query_results.push(response.clone());
                Ok(response)
            }
            Err(reason) => {
                let err = EnvError::MalformedArguments { tool: call.name.clone(), reason };
                self.records.push(StepRecord::Query {
                    step,
                    tool: call.name.clone(),
                    arguments: call.arguments.clone(),
                    response: err.agent_text(),
                    malformed: true,
                    state,
                });
                Err(err)
            }
        }
    }

    pub fn append_reasoning(&mut self, text: impl Into<String>) -> Result<(), EnvError> {
        if self.is_terminated() {
            return Err(EnvError::EpisodeTerminated);
        }
        let text = text.into();
        self.records.push(StepRecord::Reasoning { step: self.next_step(), text: text.clone() });
        self.reasoning_log.push(text);
        Ok(())
    }

    /// Ends the episode and returns its trajectory.
    pub fn submit_decision(&mut self, action: Decision) -> Result<Trajectory, EnvError> {
        if self.is_terminated() {
            return Err(EnvError::EpisodeTerminated);
        }
        self.records.push(StepRecord::Decision { step: self.next_step(), action, state: self.state_digest() });
        self.final_action = Some(action);
        Ok(self.trajectory().expect("terminated"))
    }

    /// The trajectory, once the episode has terminated.
    pub fn trajectory(&self) -> Option<Trajectory> {
        self.final_action?;
        Some(Trajectory {
            symbol: self.config.symbol.clone(),
            date: self.config.curr_date,
            max_tool_calls: Some(self.config.max_tool_calls),
            records: self.records.clone(),
        })
    }
}
