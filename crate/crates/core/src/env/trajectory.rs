//! Recorded episodes and their JSON-lines file format.

use std::fmt::Write as _;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{Decision, EnvError, Episode, EpisodeConfig, ToolCall};
use crate::marketdata::Corpus;

/// One line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StepRecord {
    Reasoning {
        step: usize,
        text: String,
    },
    Query {
        step: usize,
        tool: String,
        arguments: Value,
        response: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        malformed: bool,
        /// Digest of the state the query was issued from.
        #[serde(default, skip_serializing_if = "String::is_empty")]
        state: String,
    },
    Decision {
        step: usize,
        action: Decision,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        state: String,
    },
}

/// Trailing record of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub symbol: String,
    pub date: NaiveDate,
    pub malformed_calls: usize,
    pub assistant_turns: usize,
    pub tool_calls_per_turn: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tool_calls: Option<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("trajectory has no decision record")]
    MissingDecision,
    #[error("trajectory has no metadata record")]
    MissingMetadata,
    #[error("record at line {line} follows the decision")]
    RecordAfterDecision { line: usize },
}

/// A finished episode: `(query | reasoning)* decision`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub symbol: String,
    pub date: NaiveDate,
    pub max_tool_calls: Option<usize>,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn decision(&self) -> Decision {
        match self.records.last() {
            Some(StepRecord::Decision { action, .. }) => *action,
            _ => unreachable!("trajectory always ends in a decision"),
        }
    }

    /// Number of successful (well-formed) tool calls.
    pub fn successful_calls(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r, StepRecord::Query { malformed: false, .. }))
            .count()
    }

    pub fn malformed_calls(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r, StepRecord::Query { malformed: true, .. }))
            .count()
    }

    pub fn reasoning(&self) -> impl Iterator<Item = &str> {
        self.records.iter().filter_map(|r| match r {
            StepRecord::Reasoning { text, .. } => Some(text.as_str()),
            _ => None,
        })
    }

    /// Successful calls per assistant turn. A reasoning segment that follows a
    /// tool call opens a new turn; the decision belongs to the last turn.
    pub fn tool_calls_per_turn(&self) -> Vec<usize> {
        let mut turns: Vec<usize> = Vec::new();
        let mut current_has_calls = false;
        for record in &self.records {
            match record {
                StepRecord::Reasoning { .. } => {
                    if turns.is_empty() || current_has_calls {
                        turns.push(0);
                        current_has_calls = false;
                    }
                }
                StepRecord::Query { malformed, .. } => {
                    if turns.is_empty() {
                        turns.push(0);
                    }
                    current_has_calls = true;
                    if !malformed {
                        *turns.last_mut().unwrap() += 1;
                    }
                }
                StepRecord::Decision { .. } => {
                    if turns.is_empty() {
                        turns.push(0);
                    }
                }
            }
        }
        turns
    }

    /// All of at least two calls issued in one turn that ends in the decision.
    pub fn is_collect_then_conclude(&self) -> bool {
        let turns = self.tool_calls_per_turn();
        let total: usize = turns.iter().sum();
        total >= 2 && turns.last() == Some(&total)
    }

    /// The well-formed and malformed calls, in order.
    pub fn tool_calls(&self) -> Vec<ToolCall> {
        self.records
            .iter()
            .filter_map(|r| match r {
                StepRecord::Query { tool, arguments, .. } => Some(ToolCall::new(tool.clone(), arguments.clone())),
                _ => None,
            })
            .collect()
    }

    pub fn query_responses(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter_map(|r| match r {
                StepRecord::Query { response, malformed: false, .. } => Some(response.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn metadata(&self) -> TrajectoryMetadata {
        let turns = self.tool_calls_per_turn();
        TrajectoryMetadata {
            symbol: self.symbol.clone(),
            date: self.date,
            malformed_calls: self.malformed_calls(),
            assistant_turns: turns.len(),
            tool_calls_per_turn: turns,
            max_tool_calls: self.max_tool_calls,
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            let _ = writeln!(out, "{}", serde_json::to_string(record).expect("record serializes"));
        }
        let _ = writeln!(out, "{}", serde_json::to_string(&self.metadata()).expect("metadata serializes"));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TrajectoryError> {
        let mut records = Vec::new();
        let mut metadata: Option<TrajectoryMetadata> = None;
        let mut decided = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |reason: String| TrajectoryError::Parse { line: line_no, reason };
            let value: Value = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            if metadata.is_some() {
                return Err(parse_err("content after the metadata record".into()));
            }
            if value.get("type").is_some() {
                if decided {
                    return Err(TrajectoryError::RecordAfterDecision { line: line_no });
                }
                let record: StepRecord = serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
                decided = matches!(record, StepRecord::Decision { .. });
                records.push(record);
            } else {
                metadata = Some(serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?);
            }
        }
        if !decided {
            return Err(TrajectoryError::MissingDecision);
        }
        let meta = metadata.ok_or(TrajectoryError::MissingMetadata)?;
        Ok(Trajectory { symbol: meta.symbol, date: meta.date, max_tool_calls: meta.max_tool_calls, records })
    }

    /// Re-executes the recorded reasoning and tool calls on a fresh episode and
    /// returns the resulting trajectory.
    pub fn replay(&self, corpus: Arc<Corpus>) -> Result<Trajectory, EnvError> {
        let config = EpisodeConfig {
            symbol: self.symbol.clone(),
            curr_date: self.date,
            max_tool_calls: self.max_tool_calls.unwrap_or(usize::MAX),
        };
        let mut episode = Episode::open(corpus, config)?;
        for record in &self.records {
            match record {
                StepRecord::Reasoning { text, .. } => episode.append_reasoning(text.clone())?,
                StepRecord::Query { tool, arguments, .. } => {
                    match episode.execute_query(&ToolCall::new(tool.clone(), arguments.clone())) {
                        Ok(_) | Err(EnvError::MalformedArguments { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                StepRecord::Decision { action, .. } => return episode.submit_decision(*action),
            }
        }
        unreachable!("trajectory always ends in a decision")
    }
}
