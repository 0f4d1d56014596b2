use std::fmt;

use quantgym::backtest::BacktestError;
use quantgym::baselines::BaselineError;
use quantgym::config::ConfigError;
use quantgym::env::TrajectoryError;
use quantgym::indicators::IndicatorError;
use quantgym::marketdata::MarketDataError;
use quantgym::reward::RewardError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or unparsable input.
    #[error("{0}")]
    Input(String),
    /// Inputs parse but the requested run is impossible on them.
    #[error("{0}")]
    Domain(String),
    #[error("agent at {url} unreachable: {reason}")]
    AgentUnreachable { url: String, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::AgentUnreachable { .. } => 1,
            CliError::Domain(_) => 2,
        }
    }

    pub fn input(e: impl fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn domain(e: impl fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<MarketDataError> for CliError {
    fn from(e: MarketDataError) -> Self {
        match e {
            MarketDataError::DateBeforeSeries { .. } => CliError::domain(e),
            _ => CliError::input(e),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::input(e)
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        CliError::input(e)
    }
}

impl From<BacktestError> for CliError {
    fn from(e: BacktestError) -> Self {
        CliError::domain(e)
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        CliError::domain(e)
    }
}

impl From<IndicatorError> for CliError {
    fn from(e: IndicatorError) -> Self {
        match e {
            IndicatorError::InsufficientHistory { .. } => CliError::domain(e),
            _ => CliError::input(e),
        }
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::InvalidConfig(_) => CliError::input(e),
            _ => CliError::domain(e),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
