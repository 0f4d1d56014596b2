//! Deterministic trading-decision environment and backtesting engine.
//!
//! The crate is organised around the lifecycle of one decision:
//!
//! - [`marketdata`] loads bars and documents and answers point-in-time queries.
//! - [`indicators`] computes the technical indicator suite over a [`BarSeries`].
//! - [`env`] runs an episode: tool queries, reasoning, and a terminal decision.
//! - [`reward`] scores a finished [`Trajectory`].
//! - [`backtest`] replays a signal sequence through the portfolio model.
//! - [`baselines`] produces rule-based signal sequences.

pub mod backtest;
pub mod baselines;
pub mod config;
pub mod env;
pub mod indicators;
pub mod marketdata;
pub mod reward;
pub mod svg;

mod stats;

pub use backtest::{BacktestConfig, BacktestReport, PortfolioState};
pub use env::{Decision, Episode, EpisodeConfig, ToolCall, Trajectory};
pub use indicators::{IndicatorKind, IndicatorSeries};
pub use marketdata::{Bar, BarSeries, Corpus, Document, DocumentCategory, PriceField};
pub use reward::{RewardBreakdown, RewardConfig};
