//! Trajectory scoring: an outcome score from the realised forward return, and
//! process scores for reasoning length and tool use.
//!
//! `total = alpha * outcome + format + tool`. Both process scores are capped at
//! zero; they only ever subtract.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Decision, Trajectory};
use crate::marketdata::{BarSeries, PriceField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("need {needed} trading days after index {t}, only {available} available")]
    InsufficientFuture { t: usize, needed: usize, available: usize },
    #[error("{0} is not in the price series")]
    DateNotFound(NaiveDate),
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenCounting {
    /// Whitespace-delimited words.
    #[default]
    Whitespace,
    /// `ceil(chars / 4)`.
    CharsDiv4,
}

impl TokenCounting {
    pub fn count(self, text: &str) -> usize {
        match self {
            TokenCounting::Whitespace => text.split_whitespace().count(),
            TokenCounting::CharsDiv4 => text.chars().count().div_ceil(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Forward horizon in trading days.
    pub horizon: usize,
    /// Decay of the horizon weights, in (0, 1).
    pub eta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub min_token: usize,
    pub max_token: usize,
    pub min_tool: usize,
    pub max_tool: usize,
    pub format_penalty: f64,
    pub tool_band_penalty: f64,
    pub pattern_penalty: f64,
    pub malformed_penalty: f64,
    pub malformed_cap: f64,
    pub token_counting: TokenCounting,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            horizon: 7,
            eta: 0.8,
            theta: 0.015,
            alpha: 5.0,
            min_token: 200,
            max_token: 600,
            min_tool: 4,
            max_tool: 8,
            format_penalty: 0.5,
            tool_band_penalty: 0.5,
            pattern_penalty: 0.5,
            malformed_penalty: 0.25,
            malformed_cap: 1.0,
            token_counting: TokenCounting::Whitespace,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let fail = |msg: &str| Err(RewardError::InvalidConfig(msg.to_string()));
        if self.horizon == 0 {
            return fail("horizon must be at least 1");
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return fail("eta must lie in (0, 1)");
        }
        if !(self.theta > 0.0) {
            return fail("theta must be positive");
        }
        if !(self.alpha > 0.0) {
            return fail("alpha must be positive");
        }
        if self.min_token >= self.max_token {
            return fail("min_token must be below max_token");
        }
        if self.min_tool > self.max_tool {
            return fail("min_tool must not exceed max_tool");
        }
        let penalties = [
            self.format_penalty,
            self.tool_band_penalty,
            self.pattern_penalty,
            self.malformed_penalty,
            self.malformed_cap,
        ];
        if penalties.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return fail("penalty constants must be finite and non-negative");
        }
        Ok(())
    }

    /// Normalised horizon weights `eta^h / sum_i eta^i`, `h = 1..=horizon`.
    pub fn horizon_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = (1..=self.horizon).map(|h| self.eta.powi(h as i32)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    HighlyBullish,
    HighlyBearish,
    Sideways,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::HighlyBullish, Regime::HighlyBearish, Regime::Sideways];
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub forward_return: f64,
    pub regime: Regime,
    pub outcome: f64,
    pub format: f64,
    pub tool: f64,
    pub total: f64,
}

/// Exponentially weighted forward return at trading-day index `t`, anchored at
/// the next day's price `prices[t + 1]`.
pub fn forward_return(prices: &[f64], t: usize, cfg: &RewardConfig) -> Result<f64, RewardError> {
    let needed = cfg.horizon + 1;
    let available = prices.len().saturating_sub(t + 1);
    if available < needed {
        return Err(RewardError::InsufficientFuture { t, needed, available });
    }
    let anchor = prices[t + 1];
    Ok(cfg
        .horizon_weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * (prices[t + i + 2] / anchor - 1.0))
        .sum())
}

/// `|r| <= theta` is sideways.
pub fn classify_regime(r: f64, theta: f64) -> Regime {
    if r > theta {
        Regime::HighlyBullish
    } else if r < -theta {
        Regime::HighlyBearish
    } else {
        Regime::Sideways
    }
}

pub fn outcome_score(regime: Regime, action: Decision) -> f64 {
    use Decision::*;
    use Regime::*;
    match (regime, action) {
        (HighlyBullish, Buy) => 1.0,
        (HighlyBullish, Sell) => -1.0,
        (HighlyBullish, Hold) => -0.75,
        (HighlyBearish, Buy) => -1.0,
        (HighlyBearish, Sell) => 1.0,
        (HighlyBearish, Hold) => -0.75,
        (Sideways, Buy) => -0.5,
        (Sideways, Sell) => -0.5,
        (Sideways, Hold) => 1.0,
    }
}

pub fn reasoning_tokens(trajectory: &Trajectory, cfg: &RewardConfig) -> usize {
    let joined: Vec<&str> = trajectory.reasoning().collect();
    cfg.token_counting.count(&joined.join("\n"))
}

pub fn format_score(trajectory: &Trajectory, cfg: &RewardConfig) -> f64 {
    let tokens = reasoning_tokens(trajectory, cfg);
    if (cfg.min_token..=cfg.max_token).contains(&tokens) {
        0.0
    } else {
        -cfg.format_penalty
    }
}

pub fn tool_score(trajectory: &Trajectory, cfg: &RewardConfig) -> f64 {
    let calls = trajectory.successful_calls();
    let band = if (cfg.min_tool..=cfg.max_tool).contains(&calls) { 0.0 } else { -cfg.tool_band_penalty };
    let pattern = if trajectory.is_collect_then_conclude() { -cfg.pattern_penalty } else { 0.0 };
    let malformed = -(cfg.malformed_penalty * trajectory.malformed_calls() as f64).min(cfg.malformed_cap);
    band + pattern + malformed
}

/// Scores a trajectory against the realised prices following its date.
pub fn score_trajectory(
    trajectory: &Trajectory,
    series: &BarSeries,
    field: PriceField,
    cfg: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    let t = series.index_of(trajectory.date).ok_or(RewardError::DateNotFound(trajectory.date))?;
    let r = forward_return(&series.prices(field), t, cfg)?;
    let regime = classify_regime(r, cfg.theta);
    let outcome = outcome_score(regime, trajectory.decision());
    let format = format_score(trajectory, cfg);
    let tool = tool_score(trajectory, cfg);
    Ok(RewardBreakdown { forward_return: r, regime, outcome, format, tool, total: cfg.alpha * outcome + format + tool })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::StepRecord;
    use serde_json::json;

    fn cfg(horizon: usize, eta: f64) -> RewardConfig {
        RewardConfig { horizon, eta, ..RewardConfig::default() }
    }

    #[test]
    fn flat_future_is_zero() {
        let prices = [50.0; 10];
        assert_eq!(forward_return(&prices, 0, &RewardConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn two_day_horizon_hand_value() {
        // weights (2/3, 1/3); returns 0.10 and 0.20
        let prices = [90.0, 100.0, 110.0, 120.0];
        let r = forward_return(&prices, 0, &cfg(2, 0.5)).unwrap();
        assert!((r - 0.4 / 3.0).abs() < 1e-15, "{r}");
    }

    #[test]
    fn boundary_needs_horizon_plus_one() {
        let prices = [1.0; 9];
        assert!(forward_return(&prices, 0, &cfg(7, 0.8)).is_ok());
        assert_eq!(
            forward_return(&prices, 1, &cfg(7, 0.8)),
            Err(RewardError::InsufficientFuture { t: 1, needed: 8, available: 7 })
        );
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(0.02, 0.015), Regime::HighlyBullish);
        assert_eq!(classify_regime(0.0, 0.3), Regime::Sideways);
        assert_eq!(classify_regime(-0.015, 0.015), Regime::Sideways);
        assert_eq!(classify_regime(0.015, 0.015), Regime::Sideways);
        assert_eq!(classify_regime(-0.0151, 0.015), Regime::HighlyBearish);
    }

    #[test]
    fn reward_matrix() {
        assert_eq!(outcome_score(Regime::HighlyBullish, Decision::Buy), 1.0);
        assert_eq!(outcome_score(Regime::HighlyBearish, Decision::Hold), -0.75);
        assert_eq!(outcome_score(Regime::Sideways, Decision::Hold), 1.0);
        for regime in [Regime::HighlyBullish, Regime::HighlyBearish] {
            let wrong = if regime == Regime::HighlyBullish { Decision::Sell } else { Decision::Buy };
            assert!(outcome_score(regime, wrong) < outcome_score(regime, Decision::Hold));
        }
    }

    fn trajectory(records: Vec<StepRecord>) -> Trajectory {
        Trajectory { symbol: "X".into(), date: NaiveDate::from_ymd_opt(2025, 1, 2).unwrap(), max_tool_calls: Some(8), records }
    }

    fn reasoning(words: usize) -> StepRecord {
        StepRecord::Reasoning { step: 0, text: vec!["w"; words].join(" ") }
    }

    fn query(malformed: bool) -> StepRecord {
        StepRecord::Query {
            step: 0,
            tool: "get_market_data".into(),
            arguments: json!({}),
            response: String::new(),
            malformed,
            state: String::new(),
        }
    }

    fn decision() -> StepRecord {
        StepRecord::Decision { step: 0, action: Decision::Hold, state: String::new() }
    }

    #[test]
    fn format_band() {
        let c = RewardConfig::default();
        assert_eq!(format_score(&trajectory(vec![reasoning(400), decision()]), &c), 0.0);
        assert_eq!(format_score(&trajectory(vec![reasoning(700), decision()]), &c), -0.5);
        assert_eq!(format_score(&trajectory(vec![decision()]), &c), -0.5);
        assert_eq!(format_score(&trajectory(vec![reasoning(200), decision()]), &c), 0.0);
        assert_eq!(format_score(&trajectory(vec![reasoning(600), decision()]), &c), 0.0);
    }

    #[test]
    fn chars_div4_counting() {
        assert_eq!(TokenCounting::CharsDiv4.count("abcde"), 2);
        assert_eq!(TokenCounting::CharsDiv4.count(""), 0);
    }

    #[test]
    fn tool_terms() {
        let c = RewardConfig::default();
        let multi_turn = |n: usize| {
            let mut r = Vec::new();
            for _ in 0..n {
                r.push(reasoning(10));
                r.push(query(false));
            }
            r.push(reasoning(10));
            r.push(decision());
            trajectory(r)
        };
        assert_eq!(tool_score(&multi_turn(5), &c), 0.0);
        assert_eq!(tool_score(&multi_turn(2), &c), -0.5);

        let mut one_turn = vec![reasoning(10)];
        one_turn.extend((0..5).map(|_| query(false)));
        one_turn.push(decision());
        assert_eq!(tool_score(&trajectory(one_turn), &c), -0.5);

        let mut with_malformed = multi_turn(5).records;
        with_malformed.insert(0, query(true));
        assert_eq!(tool_score(&trajectory(with_malformed), &c), -0.25);

        let mut many_bad = multi_turn(5).records;
        for _ in 0..7 {
            many_bad.insert(0, query(true));
        }
        assert_eq!(tool_score(&trajectory(many_bad), &c), -1.0);
    }

    fn flat_series(n: u64) -> BarSeries {
        let bars = (0..n)
            .map(|i| crate::marketdata::Bar {
                date: NaiveDate::from_ymd_opt(2025, 1, 2).unwrap() + chrono::Days::new(i),
                open: 100.0,
                high: 100.0,
                low: 100.0,
                close: 100.0,
                adj_close: 100.0,
                volume: 1,
            })
            .collect();
        BarSeries::new("X", bars).unwrap()
    }

    #[test]
    fn composition() {
        let c = RewardConfig::default();
        let series = flat_series(9);
        let mut records = Vec::new();
        for _ in 0..5 {
            records.push(reasoning(60));
            records.push(query(false));
        }
        records.push(decision());
        let b = score_trajectory(&trajectory(records), &series, PriceField::Close, &c).unwrap();
        assert_eq!(b.regime, Regime::Sideways);
        assert_eq!((b.outcome, b.format, b.tool, b.total), (1.0, 0.0, 0.0, 5.0));

        let last = Trajectory { date: series.last_date().unwrap(), ..trajectory(vec![decision()]) };
        assert!(matches!(
            score_trajectory(&last, &series, PriceField::Close, &c),
            Err(RewardError::InsufficientFuture { .. })
        ));
    }

    #[test]
    fn all_penalties_compose() {
        // sideways BUY, no reasoning, two calls in separate turns
        let c = RewardConfig::default();
        let records = vec![
            query(false),
            StepRecord::Reasoning { step: 0, text: String::new() },
            query(false),
            StepRecord::Decision { step: 0, action: Decision::Buy, state: String::new() },
        ];
        let b = score_trajectory(&trajectory(records), &flat_series(9), PriceField::Close, &c).unwrap();
        assert_eq!((b.outcome, b.format, b.tool), (-0.5, -0.5, -0.5));
        assert_eq!(b.total, -3.5);
    }

    #[test]
    fn config_validation() {
        assert!(RewardConfig::default().validate().is_ok());
        assert!(cfg(7, 1.0).validate().is_err());
        assert!(cfg(0, 0.5).validate().is_err());
        assert!(RewardConfig { min_token: 600, max_token: 200, ..Default::default() }.validate().is_err());
        assert!(RewardConfig { min_tool: 9, ..Default::default() }.validate().is_err());
    }
}
