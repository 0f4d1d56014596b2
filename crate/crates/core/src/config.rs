//! Flat key-value configuration file holding reward and backtest settings.
//!
//! ```toml
//! horizon = 7
//! eta = 0.8
//! theta = 0.015
//! alpha = 5
//! lambda = 0.001
//! kappa = 0.9
//! ```
//!
//! Omitted keys take their defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::BacktestConfig;
use crate::marketdata::PriceField;
use crate::reward::{RewardConfig, TokenCounting};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EngineConfig {
    pub reward: RewardConfig,
    pub backtest: BacktestConfig,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FlatConfig {
    horizon: Option<usize>,
    eta: Option<f64>,
    theta: Option<f64>,
    alpha: Option<f64>,
    min_token: Option<usize>,
    max_token: Option<usize>,
    min_tool: Option<usize>,
    max_tool: Option<usize>,
    format_penalty: Option<f64>,
    tool_band_penalty: Option<f64>,
    pattern_penalty: Option<f64>,
    malformed_penalty: Option<f64>,
    malformed_cap: Option<f64>,
    token_counting: Option<TokenCounting>,
    lambda: Option<f64>,
    kappa: Option<f64>,
    initial_cash: Option<f64>,
    price_field: Option<PriceField>,
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let flat: FlatConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut reward = RewardConfig::default();
        let mut backtest = BacktestConfig::default();
        macro_rules! apply {
            ($target:ident: $($field:ident),*) => {
                $(if let Some(v) = flat.$field { $target.$field = v; })*
            };
        }
        apply!(reward: horizon, eta, theta, alpha, min_token, max_token, min_tool, max_tool,
            format_penalty, tool_band_penalty, pattern_penalty, malformed_penalty, malformed_cap,
            token_counting);
        apply!(backtest: lambda, kappa, initial_cash, price_field);
        reward.validate().map_err(|e| ConfigError::Parse(e.to_string()))?;
        backtest.validate().map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(Self { reward, backtest })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(EngineConfig::from_toml_str("").unwrap(), EngineConfig::default());
    }

    #[test]
    fn overrides_and_validation() {
        let cfg = EngineConfig::from_toml_str("eta = 0.5\nkappa = 0.5\ntoken_counting = \"chars_div4\"").unwrap();
        assert_eq!(cfg.reward.eta, 0.5);
        assert_eq!(cfg.backtest.kappa, 0.5);
        assert_eq!(cfg.reward.token_counting, TokenCounting::CharsDiv4);
        assert!(EngineConfig::from_toml_str("eta = 1.5").is_err());
        assert!(EngineConfig::from_toml_str("gamma = 0.9").is_err());
    }
}
