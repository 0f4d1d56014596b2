//! Test support: seeded random fixtures and naive reference implementations.
//!
//! The references are written straight from the textbook definitions, index by
//! index, and share no code with the library.

#![allow(dead_code)]

pub mod oracle;

use std::sync::Arc;

use chrono::{Days, NaiveDate};
use quantgym::indicators::IndicatorKind;
use quantgym::marketdata::{Bar, BarSeries, Corpus};
use quantgym::env::Tool;
use quantgym::marketdata::{Document, DocumentCategory};
use quantgym::ToolCall;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use regex::Regex;
use serde_json::{json, Value};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub fn fixture_dir() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures").to_string()
}

pub fn fixture_corpus() -> Arc<Corpus> {
    Arc::new(Corpus::load_dir(format!("{}/corpus", fixture_dir())).unwrap())
}

/// Random-walk OHLCV bars on consecutive weekdays.
pub fn random_bars(rng: &mut impl Rng, n: usize) -> BarSeries {
    let mut date = date("2024-01-01");
    let mut close: f64 = rng.random_range(20.0..500.0);
    let mut bars = Vec::with_capacity(n);
    for _ in 0..n {
        let open = close * (1.0 + rng.random_range(-0.01..0.01));
        close = (close * (1.0 + rng.random_range(-0.03..0.03))).max(1.0);
        let high = open.max(close) * (1.0 + rng.random_range(0.0..0.02));
        let low = open.min(close) * (1.0 - rng.random_range(0.0..0.02));
        bars.push(Bar {
            date,
            open,
            high,
            low,
            close,
            adj_close: close,
            volume: rng.random_range(1_000..5_000_000),
        });
        date = next_weekday(date);
    }
    BarSeries::new("RND", bars).unwrap()
}

pub fn next_weekday(d: NaiveDate) -> NaiveDate {
    use chrono::{Datelike, Weekday};
    let mut n = d + Days::new(1);
    while matches!(n.weekday(), Weekday::Sat | Weekday::Sun) {
        n = n + Days::new(1);
    }
    n
}

pub fn flat_bars(n: usize, price: f64) -> BarSeries {
    let mut date = date("2024-01-01");
    let mut bars = Vec::with_capacity(n);
    for _ in 0..n {
        bars.push(Bar { date, open: price, high: price, low: price, close: price, adj_close: price, volume: 1000 });
        date = next_weekday(date);
    }
    BarSeries::new("FLAT", bars).unwrap()
}

pub fn bars_from_closes(closes: &[f64]) -> BarSeries {
    let mut date = date("2024-01-01");
    let mut bars = Vec::with_capacity(closes.len());
    for &c in closes {
        bars.push(Bar { date, open: c, high: c, low: c, close: c, adj_close: c, volume: 1000 });
        date = next_weekday(date);
    }
    BarSeries::new("C", bars).unwrap()
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

fn scalar(xs: Vec<f64>) -> Vec<Vec<f64>> {
    xs.into_iter().map(|x| vec![x]).collect()
}

/// Reference values for `kind` on `s`, one component vector per point.
pub fn indicator_reference(kind: IndicatorKind, s: &BarSeries) -> Vec<Vec<f64>> {
    let bars = s.bars();
    let closes = s.closes();
    match kind {
        IndicatorKind::Sma { period } => scalar(oracle::sma(&closes, period)),
        IndicatorKind::Ema { period } => scalar(oracle::ema(&closes, period)),
        IndicatorKind::Vwma { period } => scalar(oracle::vwma(bars, period)),
        IndicatorKind::Rsi { period } => scalar(oracle::rsi(&closes, period)),
        IndicatorKind::Stoch { k_period, k_smooth, d_smooth } => {
            oracle::stoch(bars, k_period, k_smooth, d_smooth).into_iter().map(|(k, d)| vec![k, d]).collect()
        }
        IndicatorKind::Cci { period } => scalar(oracle::cci(bars, period)),
        IndicatorKind::Bbands { period, width } => oracle::bbands(&closes, period, width as f64)
            .into_iter()
            .map(|(m, u, l)| vec![m, u, l])
            .collect(),
        IndicatorKind::Atr { period } => scalar(oracle::atr(bars, period)),
        IndicatorKind::Obv => scalar(oracle::obv(bars)),
        IndicatorKind::Cmf { period } => scalar(oracle::cmf(bars, period)),
        IndicatorKind::Macd { fast, slow, signal } => {
            oracle::macd(&closes, fast, slow, signal).into_iter().map(|(m, s, h)| vec![m, s, h]).collect()
        }
    }
}


pub fn document_line(category: DocumentCategory, symbol: &str, d: NaiveDate, r: &mut impl Rng) -> String {
    let payload = match category {
        DocumentCategory::News => json!({"headline": format!("Headline {d}"), "summary": "s", "sentiment": r.random_range(-1.0..1.0)}),
        DocumentCategory::Reddit => json!({"title": format!("Post on {d}"), "summary": "s"}),
        DocumentCategory::Macro => json!({"indicator": "CPI", "value": r.random_range(0.0..5.0)}),
        DocumentCategory::BalanceSheet | DocumentCategory::Cashflow | DocumentCategory::IncomeStatement => {
            json!({"period": "Q1", "fields": {"totalAssets": 1.0, "reportedDate": d.to_string()}})
        }
        DocumentCategory::InsiderTransaction => {
            json!({"name": "DOE, J", "role": "officer", "shares": 10.0, "direction": "disposal"})
        }
        DocumentCategory::Dividend => json!({"amount": 0.5}),
        DocumentCategory::EarningsEstimate => {
            json!({"horizon": "next quarter", "eps_estimate": 1.0, "revenue_estimate": 2.0, "num_analysts": 3})
        }
    };
    let mut obj = payload.as_object().unwrap().clone();
    obj.insert("date".into(), json!(d.to_string()));
    obj.insert("symbol".into(), json!(symbol));
    Value::Object(obj).to_string()
}

/// Bars plus documents in every category, scattered before, inside and after
/// the bar range.
pub fn random_corpus(seed: u64) -> Arc<Corpus> {
    let mut r = rng(seed);
    let n = r.random_range(40..90);
    let series = random_bars(&mut r, n);
    let first = series.first_date().unwrap();
    let span = (series.last_date().unwrap() - first).num_days() as u64;
    let mut builder = Corpus::builder();
    for category in DocumentCategory::ALL {
        for _ in 0..r.random_range(0..25) {
            let d = first - Days::new(400) + Days::new(r.random_range(0..span + 800));
            let line = document_line(category, "RND", d, &mut r);
            builder = builder.document(Document::from_json_line(category, &line).unwrap());
        }
    }
    Arc::new(builder.series(series).build())
}

pub fn random_call(r: &mut impl Rng, episode_date: NaiveDate) -> ToolCall {
    let tool = Tool::ALL.choose(r).unwrap().name();
    let offset: i64 = r.random_range(-60..5);
    let curr = if offset >= 0 { episode_date + Days::new(offset as u64) } else { episode_date - Days::new((-offset) as u64) };
    let mut args = json!({"symbol": "RND", "curr_date": curr.to_string()});
    if r.random_bool(0.8) {
        args["look_back_days"] = json!(r.random_range(0..500));
    }
    if tool == "get_stock_indicators" {
        args["indicator"] = json!(*quantgym::indicators::IndicatorKind::NAMES.choose(r).unwrap());
    }
    ToolCall::new(tool, args)
}

pub fn dates_in(text: &str) -> Vec<NaiveDate> {
    let re = Regex::new(r"\d{4}-\d{2}-\d{2}").unwrap();
    re.find_iter(text).filter_map(|m| NaiveDate::parse_from_str(m.as_str(), "%Y-%m-%d").ok()).collect()
}

