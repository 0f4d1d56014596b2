//! Long-only single-asset portfolio simulation and the ARR / SR / MDD metrics.
//!
//! A decision taken on trading day `t` executes at the close of day `t + 1`.
//! `V_0` is the all-cash starting value and `V_t` is valued at day `t`'s close.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Decision;
use crate::marketdata::{BarSeries, PriceField};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BacktestError {
    #[error("execution price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("{signals} signals for {bars} bars: expected one signal per bar except the last")]
    LengthMismatch { signals: usize, bars: usize },
    #[error("decision {index} has no next trading day to execute on")]
    MissingExecutionDay { index: usize },
    #[error("value series too short: {0}")]
    DegenerateSeries(String),
    #[error("invalid backtest config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    /// Transaction fee rate applied to BUY and SELL notional.
    pub lambda: f64,
    /// Fraction of cash deployed by a BUY.
    pub kappa: f64,
    pub initial_cash: f64,
    pub price_field: PriceField,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self { lambda: 0.001, kappa: 0.9, initial_cash: 10_000.0, price_field: PriceField::Close }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<(), BacktestError> {
        let fail = |m: &str| Err(BacktestError::InvalidConfig(m.into()));
        if !(0.0..1.0).contains(&self.lambda) {
            return fail("lambda must lie in [0, 1)");
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return fail("kappa must lie in (0, 1]");
        }
        if self.kappa * (1.0 + self.lambda) > 1.0 {
            return fail("kappa * (1 + lambda) must not exceed 1");
        }
        if !(self.initial_cash.is_finite() && self.initial_cash > 0.0) {
            return fail("initial_cash must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioState {
    pub shares: u64,
    pub cash: f64,
}

impl PortfolioState {
    pub fn all_cash(cash: f64) -> Self {
        Self { shares: 0, cash }
    }

    pub fn value(&self, price: f64) -> f64 {
        self.cash + self.shares as f64 * price
    }
}

/// One executed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub date: NaiveDate,
    pub action: Decision,
    pub shares: u64,
    pub price: f64,
    pub fee: f64,
}

/// Applies one action at execution price `price`.
pub fn step_portfolio(
    state: PortfolioState,
    action: Decision,
    price: f64,
    cfg: &BacktestConfig,
) -> Result<PortfolioState, BacktestError> {
    if !(price.is_finite() && price > 0.0) {
        return Err(BacktestError::NonPositivePrice(price));
    }
    Ok(match action {
        Decision::Buy => {
            let bought = (cfg.kappa * state.cash / price).floor() as u64;
            PortfolioState {
                shares: state.shares + bought,
                cash: state.cash - (1.0 + cfg.lambda) * bought as f64 * price,
            }
        }
        Decision::Sell => PortfolioState {
            shares: 0,
            cash: state.cash + (1.0 - cfg.lambda) * state.shares as f64 * price,
        },
        Decision::Hold => state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub arr: f64,
    pub sr: f64,
    pub mdd: f64,
}

impl Metrics {
    pub fn from_values(values: &[f64]) -> Result<Self, BacktestError> {
        Ok(Self { arr: arr(values)?, sr: sharpe(values)?, mdd: mdd(values)? })
    }

    /// Arithmetic mean of each metric.
    pub fn average(all: &[Metrics]) -> Option<Metrics> {
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        Some(Metrics {
            arr: all.iter().map(|m| m.arr).sum::<f64>() / n,
            sr: all.iter().map(|m| m.sr).sum::<f64>() / n,
            mdd: all.iter().map(|m| m.mdd).sum::<f64>() / n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub symbol: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    #[serde(rename = "T")]
    pub t: usize,
    pub values: Vec<f64>,
    pub trades: Vec<Trade>,
    pub metrics: Metrics,
}

impl BacktestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs `signals[i]` on bar `i` and executes it on bar `i + 1`, so `prices`
/// must hold exactly one more bar than there are signals.
pub fn run_backtest(
    signals: &[Decision],
    prices: &BarSeries,
    cfg: &BacktestConfig,
) -> Result<BacktestReport, BacktestError> {
    cfg.validate()?;
    let bars = prices.bars();
    if signals.len() >= bars.len() {
        return Err(BacktestError::MissingExecutionDay { index: bars.len().saturating_sub(1) });
    }
    if signals.len() + 1 != bars.len() || signals.is_empty() {
        return Err(BacktestError::LengthMismatch { signals: signals.len(), bars: bars.len() });
    }

    let mut state = PortfolioState::all_cash(cfg.initial_cash);
    let mut values = Vec::with_capacity(bars.len());
    values.push(cfg.initial_cash);
    let mut trades = Vec::new();

    for (signal, exec) in signals.iter().zip(&bars[1..]) {
        let price = exec.price(cfg.price_field);
        let next = step_portfolio(state, *signal, price, cfg)?;
        let traded = next.shares.abs_diff(state.shares);
        if traded > 0 {
            trades.push(Trade {
                date: exec.date,
                action: *signal,
                shares: traded,
                price,
                fee: cfg.lambda * traded as f64 * price,
            });
        }
        state = next;
        values.push(state.value(price));
    }

    let metrics = Metrics::from_values(&values)?;
    Ok(BacktestReport {
        symbol: prices.symbol().to_string(),
        start: bars[0].date,
        end: bars[bars.len() - 1].date,
        t: signals.len(),
        values,
        trades,
        metrics,
    })
}

fn check_positive(values: &[f64]) -> Result<(), BacktestError> {
    if values.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(())
    } else {
        Err(BacktestError::DegenerateSeries("values must be positive".into()))
    }
}

/// `(V_T / V_0)^(252 / T) - 1`.
pub fn arr(values: &[f64]) -> Result<f64, BacktestError> {
    if values.len() < 2 {
        return Err(BacktestError::DegenerateSeries("ARR needs T >= 1".into()));
    }
    let t = (values.len() - 1) as f64;
    let v0 = values[0];
    if !(v0 > 0.0) {
        return Err(BacktestError::DegenerateSeries("V_0 must be positive".into()));
    }
    Ok((values[values.len() - 1] / v0).powf(TRADING_DAYS_PER_YEAR / t) - 1.0)
}

/// Mean daily return over its sample standard deviation; not annualised.
/// Zero when the returns have no dispersion.
pub fn sharpe(values: &[f64]) -> Result<f64, BacktestError> {
    if values.len() < 3 {
        return Err(BacktestError::DegenerateSeries("SR needs T >= 2".into()));
    }
    check_positive(values)?;
    let returns: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    Ok(if sd == 0.0 { 0.0 } else { mean / sd })
}

/// Largest peak-to-trough decline over `V_1..V_T`, with the running peak
/// taken over the same range.
pub fn mdd(values: &[f64]) -> Result<f64, BacktestError> {
    if values.len() < 2 {
        return Err(BacktestError::DegenerateSeries("MDD needs T >= 1".into()));
    }
    check_positive(values)?;
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0_f64;
    for &v in &values[1..] {
        peak = peak.max(v);
        worst = worst.max((peak - v) / peak);
    }
    Ok(worst)
}
