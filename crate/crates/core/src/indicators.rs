//! Technical indicators over daily bars.
//!
//! All indicators are causal: the value dated `t` only uses bars dated on or
//! before `t`. Each kind has a warm-up prefix of `min_history() - 1` bars for
//! which it is undefined; [`IndicatorSeries`] holds only the defined suffix.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::{window_start, Bar, BarSeries};
use crate::stats::{mean, population_std};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorError {
    #[error("{kind} needs {needed} bars, got {got}")]
    InsufficientHistory { kind: IndicatorKind, needed: usize, got: usize },
    #[error("invalid parameters for {0}: every period must be at least 1")]
    InvalidParameters(IndicatorKind),
    #[error("unknown indicator `{0}`")]
    UnknownIndicator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "UPPERCASE")]
pub enum IndicatorKind {
    Sma { period: usize },
    Ema { period: usize },
    Vwma { period: usize },
    Rsi { period: usize },
    Stoch { k_period: usize, k_smooth: usize, d_smooth: usize },
    Cci { period: usize },
    Bbands { period: usize, width: usize },
    Atr { period: usize },
    Obv,
    Cmf { period: usize },
    Macd { fast: usize, slow: usize, signal: usize },
}

impl IndicatorKind {
    pub const NAMES: [&'static str; 11] =
        ["SMA", "EMA", "VWMA", "RSI", "STOCH", "CCI", "BBANDS", "ATR", "OBV", "CMF", "MACD"];

    pub const SMA: Self = IndicatorKind::Sma { period: 20 };
    pub const EMA: Self = IndicatorKind::Ema { period: 10 };
    pub const VWMA: Self = IndicatorKind::Vwma { period: 20 };
    pub const RSI: Self = IndicatorKind::Rsi { period: 14 };
    pub const STOCH: Self = IndicatorKind::Stoch { k_period: 14, k_smooth: 3, d_smooth: 3 };
    pub const CCI: Self = IndicatorKind::Cci { period: 21 };
    pub const BBANDS: Self = IndicatorKind::Bbands { period: 20, width: 2 };
    pub const ATR: Self = IndicatorKind::Atr { period: 14 };
    pub const OBV: Self = IndicatorKind::Obv;
    pub const CMF: Self = IndicatorKind::Cmf { period: 20 };
    pub const MACD: Self = IndicatorKind::Macd { fast: 12, slow: 26, signal: 9 };

    /// Every kind with its default parameters, in tool-listing order.
    pub const DEFAULTS: [IndicatorKind; 11] = [
        Self::SMA,
        Self::EMA,
        Self::VWMA,
        Self::RSI,
        Self::STOCH,
        Self::CCI,
        Self::BBANDS,
        Self::ATR,
        Self::OBV,
        Self::CMF,
        Self::MACD,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IndicatorKind::Sma { .. } => "SMA",
            IndicatorKind::Ema { .. } => "EMA",
            IndicatorKind::Vwma { .. } => "VWMA",
            IndicatorKind::Rsi { .. } => "RSI",
            IndicatorKind::Stoch { .. } => "STOCH",
            IndicatorKind::Cci { .. } => "CCI",
            IndicatorKind::Bbands { .. } => "BBANDS",
            IndicatorKind::Atr { .. } => "ATR",
            IndicatorKind::Obv => "OBV",
            IndicatorKind::Cmf { .. } => "CMF",
            IndicatorKind::Macd { .. } => "MACD",
        }
    }

    fn periods(&self) -> Vec<usize> {
        match *self {
            IndicatorKind::Sma { period }
            | IndicatorKind::Ema { period }
            | IndicatorKind::Vwma { period }
            | IndicatorKind::Rsi { period }
            | IndicatorKind::Cci { period }
            | IndicatorKind::Atr { period }
            | IndicatorKind::Cmf { period } => vec![period],
            IndicatorKind::Stoch { k_period, k_smooth, d_smooth } => vec![k_period, k_smooth, d_smooth],
            IndicatorKind::Bbands { period, width } => vec![period, width],
            IndicatorKind::Obv => vec![],
            IndicatorKind::Macd { fast, slow, signal } => vec![fast, slow, signal],
        }
    }

    pub fn validate(&self) -> Result<(), IndicatorError> {
        if self.periods().contains(&0) {
            return Err(IndicatorError::InvalidParameters(*self));
        }
        Ok(())
    }

    /// Bars needed before the first value is defined.
    pub fn min_history(&self) -> usize {
        match *self {
            IndicatorKind::Sma { period }
            | IndicatorKind::Ema { period }
            | IndicatorKind::Vwma { period }
            | IndicatorKind::Cci { period }
            | IndicatorKind::Bbands { period, .. }
            | IndicatorKind::Cmf { period } => period,
            IndicatorKind::Rsi { period } | IndicatorKind::Atr { period } => period + 1,
            IndicatorKind::Stoch { k_period, k_smooth, d_smooth } => k_period + k_smooth + d_smooth - 2,
            IndicatorKind::Obv => 1,
            IndicatorKind::Macd { fast, slow, signal } => fast.max(slow) + signal - 1,
        }
    }

    /// Length of the undefined prefix.
    pub fn warmup(&self) -> usize {
        self.min_history() - 1
    }

    /// One-line description appended to tool responses.
    pub fn usage_note(&self) -> &'static str {
        match self {
            IndicatorKind::Sma { .. } => "SMA: Simple moving average of closing prices over the period. Usage: Identify trend direction and act as dynamic support/resistance; compare price and shorter averages against it.",
            IndicatorKind::Ema { .. } => "EMA: Exponential moving average that weights recent closes more heavily. Usage: Capture short-term momentum shifts and confirm trend changes faster than the SMA.",
            IndicatorKind::Vwma { .. } => "VWMA: Moving average of closing prices weighted by volume. Usage: Confirm trends with volume; divergence from the SMA shows whether volume supports the move.",
            IndicatorKind::Rsi { .. } => "RSI: Measures momentum to flag overbought/oversold conditions. Usage: Apply 70/30 thresholds and watch for divergence to signal reversals.",
            IndicatorKind::Stoch { .. } => "STOCH: Stochastic oscillator locating the close within the recent high-low range (%K) with its signal line (%D). Usage: Readings above 80/below 20 flag overbought/oversold; %K-%D crossovers hint at turns.",
            IndicatorKind::Cci { .. } => "CCI: Commodity Channel Index measuring deviation of the typical price from its average. Usage: Values beyond +100/-100 flag strong trends or stretched conditions; zero-line crosses mark shifts.",
            IndicatorKind::Bbands { .. } => "Bollinger Bands: Consist of a Middle Band (typically a 20-period SMA) and Upper/Lower Bands set at ±2 standard deviations from the middle. Usage: The middle band serves as a dynamic benchmark for price, the upper band highlights potential overbought or breakout zones, and the lower band signals possible oversold conditions.",
            IndicatorKind::Atr { .. } => "ATR: Average true range, a measure of market volatility. Usage: Size positions and set stop distances; rising ATR signals expanding volatility.",
            IndicatorKind::Obv => "OBV: On-balance volume, a running total relating price changes to volume. Usage: Confirm trends when OBV moves with price; divergence warns of weakening moves.",
            IndicatorKind::Cmf { .. } => "CMF: Chaikin Money Flow, the volume-weighted accumulation/distribution over the period. Usage: Positive values indicate buying pressure, negative values selling pressure; sign changes flag shifts.",
            IndicatorKind::Macd { .. } => "MACD: Momentum indicator composed of the MACD line (difference between two EMAs), the Signal line (EMA of the MACD line), and the Histogram (gap between MACD and Signal). Usage: Identify trend changes through MACD–Signal crossovers, gauge momentum strength via Histogram size, and watch for divergence between MACD and price as early reversal signals.",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self.periods();
        if params.is_empty() {
            f.write_str(self.name())
        } else {
            let joined: Vec<String> = params.iter().map(ToString::to_string).collect();
            write!(f, "{}({})", self.name(), joined.join(","))
        }
    }
}

impl FromStr for IndicatorKind {
    type Err = IndicatorError;

    /// Parses an indicator name (case-insensitive) into its default parameters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IndicatorKind::DEFAULTS
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IndicatorError::UnknownIndicator(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum IndicatorValue {
    Scalar(f64),
    Stoch { k: f64, d: f64 },
    Bands { middle: f64, upper: f64, lower: f64 },
    Macd { macd: f64, signal: f64, histogram: f64 },
}

impl IndicatorValue {
    pub fn components(&self) -> Vec<f64> {
        match *self {
            IndicatorValue::Scalar(v) => vec![v],
            IndicatorValue::Stoch { k, d } => vec![k, d],
            IndicatorValue::Bands { middle, upper, lower } => vec![middle, upper, lower],
            IndicatorValue::Macd { macd, signal, histogram } => vec![macd, signal, histogram],
        }
    }

    /// Two-decimal rendering used in tool responses.
    pub fn render(&self) -> String {
        match *self {
            IndicatorValue::Scalar(v) => format!("{v:.2}"),
            IndicatorValue::Stoch { k, d } => format!("(K={k:.2},D={d:.2})"),
            IndicatorValue::Bands { middle, upper, lower } => {
                format!("(Middle={middle:.2},Upper={upper:.2},Lower={lower:.2})")
            }
            IndicatorValue::Macd { macd, signal, histogram } => {
                format!("(MACD={macd:.2},Signal={signal:.2},Histogram={histogram:.2})")
            }
        }
    }
}

/// Defined values of one indicator, aligned to the tail of the input dates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorSeries {
    pub kind: IndicatorKind,
    pub points: Vec<(NaiveDate, IndicatorValue)>,
}

impl IndicatorSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = &IndicatorValue> {
        self.points.iter().map(|(_, v)| v)
    }

    /// Golden-file CSV: `date,value[,value2,value3]` at full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (date, value) in &self.points {
            let cols: Vec<String> = value.components().iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{date},{}", cols.join(","));
        }
        out
    }
}

pub fn compute_indicator(series: &BarSeries, kind: IndicatorKind) -> Result<IndicatorSeries, IndicatorError> {
    kind.validate()?;
    let bars = series.bars();
    let needed = kind.min_history();
    if bars.len() < needed {
        return Err(IndicatorError::InsufficientHistory { kind, needed, got: bars.len() });
    }
    let closes: Vec<f64> = bars.iter().map(|b| b.close).collect();

    let values: Vec<IndicatorValue> = match kind {
        IndicatorKind::Sma { period } => scalars(rolling(&closes, period, mean)),
        IndicatorKind::Ema { period } => scalars(ema(&closes, period)),
        IndicatorKind::Vwma { period } => scalars(vwma(bars, period)),
        IndicatorKind::Rsi { period } => scalars(rsi(&closes, period)),
        IndicatorKind::Stoch { k_period, k_smooth, d_smooth } => stoch(bars, k_period, k_smooth, d_smooth),
        IndicatorKind::Cci { period } => scalars(cci(bars, period)),
        IndicatorKind::Bbands { period, width } => bollinger(&closes, period, width as f64),
        IndicatorKind::Atr { period } => scalars(atr(bars, period)),
        IndicatorKind::Obv => scalars(obv(bars)),
        IndicatorKind::Cmf { period } => scalars(cmf(bars, period)),
        IndicatorKind::Macd { fast, slow, signal } => macd(&closes, fast, slow, signal),
    };
    debug_assert_eq!(values.len(), bars.len() - kind.warmup());

    let offset = bars.len() - values.len();
    let points = bars[offset..].iter().map(|b| b.date).zip(values).collect();
    Ok(IndicatorSeries { kind, points })
}

fn scalars(xs: Vec<f64>) -> Vec<IndicatorValue> {
    xs.into_iter().map(IndicatorValue::Scalar).collect()
}

fn rolling(xs: &[f64], n: usize, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    xs.windows(n).map(f).collect()
}

/// EMA seeded with the SMA of the first `n` values. Length `len - n + 1`.
fn ema(xs: &[f64], n: usize) -> Vec<f64> {
    let k = 2.0 / (n as f64 + 1.0);
    let mut out = Vec::with_capacity(xs.len() + 1 - n);
    let mut prev = mean(&xs[..n]);
    out.push(prev);
    for &x in &xs[n..] {
        // prev + k(x - prev) keeps a constant input exactly fixed
        prev += k * (x - prev);
        out.push(prev);
    }
    out
}

/// Wilder smoothing seeded with the mean of the first `n` values.
fn wilder(xs: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len() + 1 - n);
    let mut prev = mean(&xs[..n]);
    out.push(prev);
    for &x in &xs[n..] {
        prev += (x - prev) / n as f64;
        out.push(prev);
    }
    out
}

fn vwma(bars: &[Bar], n: usize) -> Vec<f64> {
    bars.windows(n)
        .map(|w| {
            let volume: f64 = w.iter().map(|b| b.volume as f64).sum();
            if volume == 0.0 {
                // no volume to weight by: fall back to the simple mean
                mean(&w.iter().map(|b| b.close).collect::<Vec<_>>())
            } else {
                w.iter().map(|b| b.close * b.volume as f64).sum::<f64>() / volume
            }
        })
        .collect()
}

fn rsi(closes: &[f64], n: usize) -> Vec<f64> {
    let changes: Vec<f64> = closes.windows(2).map(|w| w[1] - w[0]).collect();
    let gains: Vec<f64> = changes.iter().map(|c| c.max(0.0)).collect();
    let losses: Vec<f64> = changes.iter().map(|c| (-c).max(0.0)).collect();
    wilder(&gains, n)
        .into_iter()
        .zip(wilder(&losses, n))
        .map(|(gain, loss)| {
            if loss == 0.0 {
                100.0
            } else if gain == 0.0 {
                0.0
            } else {
                100.0 - 100.0 / (1.0 + gain / loss)
            }
        })
        .collect()
}

fn stoch(bars: &[Bar], n: usize, k_smooth: usize, d_smooth: usize) -> Vec<IndicatorValue> {
    let raw: Vec<f64> = bars
        .windows(n)
        .map(|w| {
            let high = w.iter().map(|b| b.high).fold(f64::NEG_INFINITY, f64::max);
            let low = w.iter().map(|b| b.low).fold(f64::INFINITY, f64::min);
            let close = w[n - 1].close;
            if high == low {
                50.0
            } else {
                100.0 * (close - low) / (high - low)
            }
        })
        .collect();
    let k = rolling(&raw, k_smooth, |w| mean(w).clamp(0.0, 100.0));
    let d = rolling(&k, d_smooth, |w| mean(w).clamp(0.0, 100.0));
    k[d_smooth - 1..]
        .iter()
        .zip(d)
        .map(|(&k, d)| IndicatorValue::Stoch { k, d })
        .collect()
}

fn cci(bars: &[Bar], n: usize) -> Vec<f64> {
    let typical: Vec<f64> = bars.iter().map(|b| (b.high + b.low + b.close) / 3.0).collect();
    rolling(&typical, n, |w| {
        let avg = mean(w);
        let deviation = w.iter().map(|tp| (tp - avg).abs()).sum::<f64>() / n as f64;
        if deviation == 0.0 {
            0.0
        } else {
            (w[n - 1] - avg) / (0.015 * deviation)
        }
    })
}

fn bollinger(closes: &[f64], n: usize, width: f64) -> Vec<IndicatorValue> {
    closes
        .windows(n)
        .map(|w| {
            let middle = mean(w);
            let offset = width * population_std(w);
            IndicatorValue::Bands { middle, upper: middle + offset, lower: middle - offset }
        })
        .collect()
}

fn atr(bars: &[Bar], n: usize) -> Vec<f64> {
    let true_ranges: Vec<f64> = bars
        .windows(2)
        .map(|w| {
            let (prev_close, b) = (w[0].close, &w[1]);
            (b.high - b.low).max((b.high - prev_close).abs()).max((b.low - prev_close).abs())
        })
        .collect();
    wilder(&true_ranges, n)
}

fn obv(bars: &[Bar]) -> Vec<f64> {
    let mut total = 0.0;
    let mut out = vec![0.0];
    for w in bars.windows(2) {
        let volume = w[1].volume as f64;
        if w[1].close > w[0].close {
            total += volume;
        } else if w[1].close < w[0].close {
            total -= volume;
        }
        out.push(total);
    }
    out
}

fn cmf(bars: &[Bar], n: usize) -> Vec<f64> {
    bars.windows(n)
        .map(|w| {
            let volume: f64 = w.iter().map(|b| b.volume as f64).sum();
            if volume == 0.0 {
                return 0.0;
            }
            let flow: f64 = w
                .iter()
                .map(|b| {
                    let range = b.high - b.low;
                    let multiplier =
                        if range == 0.0 { 0.0 } else { ((b.close - b.low) - (b.high - b.close)) / range };
                    multiplier * b.volume as f64
                })
                .sum();
            (flow / volume).clamp(-1.0, 1.0)
        })
        .collect()
}

fn macd(closes: &[f64], fast: usize, slow: usize, signal: usize) -> Vec<IndicatorValue> {
    let long = fast.max(slow);
    let fast_ema = ema(closes, fast);
    let slow_ema = ema(closes, slow);
    // both EMAs defined from index long - 1
    let line: Vec<f64> = (long - 1..closes.len())
        .map(|i| fast_ema[i + 1 - fast] - slow_ema[i + 1 - slow])
        .collect();
    let signal_line = ema(&line, signal);
    line[signal - 1..]
        .iter()
        .zip(signal_line)
        .map(|(&macd, signal)| IndicatorValue::Macd { macd, signal, histogram: macd - signal })
        .collect()
}

/// Renders the points dated in `[curr_date - look_back_days, curr_date]`.
///
/// ```text
/// ## RSI values from 2025-05-02 to 2025-05-16:
///
/// 71.99-> 72.23-> 70.16
///
/// RSI: Measures momentum ...
/// ```
pub fn render_indicator_text(ind: &IndicatorSeries, curr_date: NaiveDate, look_back_days: u64) -> String {
    let from = window_start(curr_date, look_back_days);
    let rendered: Vec<String> = ind
        .points
        .iter()
        .filter(|(date, _)| *date >= from && *date <= curr_date)
        .map(|(_, v)| v.render())
        .collect();
    let body = if rendered.is_empty() {
        "No values available in this window (insufficient history).".to_string()
    } else {
        rendered.join("-> ")
    };
    format!(
        "## {} values from {from} to {curr_date}:\n\n{body}\n\n{}",
        ind.kind.name(),
        ind.kind.usage_note()
    )
}
