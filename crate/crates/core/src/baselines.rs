//! Rule-based signal generators. Each returns one [`Decision`] per bar and
//! only looks at bars up to and including that day.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Decision;
use crate::indicators::{compute_indicator, IndicatorError, IndicatorKind, IndicatorValue};
use crate::marketdata::BarSeries;
use crate::stats::{mean, population_std};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("empty price series")]
    EmptySeries,
    #[error("{strategy} needs {needed} bars, got {got}")]
    InsufficientHistory { strategy: StrategyKind, needed: usize, got: usize },
    #[error("invalid strategy parameters: {0}")]
    InvalidParameters(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum StrategyKind {
    BuyAndHold,
    MacdCrossover { fast: usize, slow: usize, signal: usize },
    Zmr { lookback: usize, entry: f64 },
}

impl StrategyKind {
    pub const MACD_DEFAULT: StrategyKind = StrategyKind::MacdCrossover { fast: 12, slow: 26, signal: 9 };
    pub const ZMR_DEFAULT: StrategyKind = StrategyKind::Zmr { lookback: 20, entry: 1.0 };

    pub fn cli_name(&self) -> &'static str {
        match self {
            StrategyKind::BuyAndHold => "buy-and-hold",
            StrategyKind::MacdCrossover { .. } => "macd",
            StrategyKind::Zmr { .. } => "zmr",
        }
    }

    pub fn signals(&self, prices: &BarSeries) -> Result<Vec<Decision>, BaselineError> {
        match *self {
            StrategyKind::BuyAndHold => buy_and_hold_signals(prices),
            StrategyKind::MacdCrossover { fast, slow, signal } => macd_crossover(prices, fast, slow, signal),
            StrategyKind::Zmr { lookback, entry } => z_score_reversion(prices, lookback, entry),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "buy-and-hold" => Ok(StrategyKind::BuyAndHold),
            "macd" => Ok(StrategyKind::MACD_DEFAULT),
            "zmr" => Ok(StrategyKind::ZMR_DEFAULT),
            other => Err(format!("unknown strategy `{other}` (expected buy-and-hold, macd or zmr)")),
        }
    }
}

pub fn buy_and_hold_signals(prices: &BarSeries) -> Result<Vec<Decision>, BaselineError> {
    if prices.is_empty() {
        return Err(BaselineError::EmptySeries);
    }
    Ok(vec![Decision::Buy; prices.len()])
}

pub fn macd_signals(prices: &BarSeries) -> Result<Vec<Decision>, BaselineError> {
    StrategyKind::MACD_DEFAULT.signals(prices)
}

pub fn zmr_signals(prices: &BarSeries) -> Result<Vec<Decision>, BaselineError> {
    StrategyKind::ZMR_DEFAULT.signals(prices)
}

/// BUY when the MACD line crosses above its signal line, SELL on the
/// opposite cross. Warm-up days are HOLD.
fn macd_crossover(prices: &BarSeries, fast: usize, slow: usize, signal: usize) -> Result<Vec<Decision>, BaselineError> {
    let strategy = StrategyKind::MacdCrossover { fast, slow, signal };
    let series = compute_indicator(prices, IndicatorKind::Macd { fast, slow, signal }).map_err(|e| match e {
        IndicatorError::InsufficientHistory { needed, got, .. } => {
            BaselineError::InsufficientHistory { strategy, needed, got }
        }
        other => BaselineError::InvalidParameters(other.to_string()),
    })?;
    let gaps: Vec<f64> = series
        .values()
        .map(|v| match *v {
            IndicatorValue::Macd { macd, signal, .. } => macd - signal,
            _ => unreachable!("MACD yields MACD values"),
        })
        .collect();

    let mut out = vec![Decision::Hold; prices.len() - gaps.len() + 1];
    out.extend(gaps.windows(2).map(|w| {
        if w[0] <= 0.0 && w[1] > 0.0 {
            Decision::Buy
        } else if w[0] >= 0.0 && w[1] < 0.0 {
            Decision::Sell
        } else {
            Decision::Hold
        }
    }));
    Ok(out)
}

/// Long-only z-score mean reversion: enter when the close sits `entry`
/// standard deviations below its rolling mean, exit once it is back at or
/// above the mean.
fn z_score_reversion(prices: &BarSeries, lookback: usize, entry: f64) -> Result<Vec<Decision>, BaselineError> {
    if lookback < 2 || !(entry > 0.0) {
        return Err(BaselineError::InvalidParameters("lookback must be >= 2 and entry > 0".into()));
    }
    if prices.len() < lookback {
        return Err(BaselineError::InsufficientHistory {
            strategy: StrategyKind::Zmr { lookback, entry },
            needed: lookback,
            got: prices.len(),
        });
    }
    let closes = prices.closes();
    let mut out = vec![Decision::Hold; lookback - 1];
    let mut in_position = false;
    for w in closes.windows(lookback) {
        let sd = population_std(w);
        let action = if sd == 0.0 {
            Decision::Hold
        } else {
            let z = (w[lookback - 1] - mean(w)) / sd;
            if !in_position && z <= -entry {
                in_position = true;
                Decision::Buy
            } else if in_position && z >= 0.0 {
                in_position = false;
                Decision::Sell
            } else {
                Decision::Hold
            }
        };
        out.push(action);
    }
    Ok(out)
}

/// `date,action` lines with a header.
pub fn signals_to_csv(prices: &BarSeries, signals: &[Decision]) -> String {
    let mut out = String::from("date,action\n");
    for (bar, s) in prices.bars().iter().zip(signals) {
        out.push_str(&format!("{},{}\n", bar.date, s));
    }
    out
}
