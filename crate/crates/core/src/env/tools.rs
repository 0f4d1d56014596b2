//! The eleven query tools: argument schemas and response text.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::indicators::{compute_indicator, render_indicator_text, IndicatorKind, IndicatorSeries};
use crate::marketdata::{window_start, Bar, Corpus, Document, DocumentCategory, Payload, TradeDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    GetMarketData,
    GetStockIndicators,
    GetNewsData,
    GetRedditData,
    GetMacroIndicators,
    GetBalanceSheet,
    GetCashflow,
    GetIncomeStatements,
    GetInsiderTransactions,
    GetDividends,
    GetEarningsEstimate,
}

impl Tool {
    pub const ALL: [Tool; 11] = [
        Tool::GetMarketData,
        Tool::GetStockIndicators,
        Tool::GetNewsData,
        Tool::GetRedditData,
        Tool::GetMacroIndicators,
        Tool::GetBalanceSheet,
        Tool::GetCashflow,
        Tool::GetIncomeStatements,
        Tool::GetInsiderTransactions,
        Tool::GetDividends,
        Tool::GetEarningsEstimate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tool::GetMarketData => "get_market_data",
            Tool::GetStockIndicators => "get_stock_indicators",
            Tool::GetNewsData => "get_news_data",
            Tool::GetRedditData => "get_reddit_data",
            Tool::GetMacroIndicators => "get_macro_indicators",
            Tool::GetBalanceSheet => "get_balance_sheet",
            Tool::GetCashflow => "get_cashflow",
            Tool::GetIncomeStatements => "get_income_statements",
            Tool::GetInsiderTransactions => "get_insider_transactions",
            Tool::GetDividends => "get_dividends",
            Tool::GetEarningsEstimate => "get_earnings_estimate",
        }
    }

    /// Look-back used when a call omits `look_back_days`.
    pub fn default_look_back(self) -> u64 {
        match self {
            Tool::GetMarketData | Tool::GetStockIndicators => 14,
            Tool::GetNewsData | Tool::GetRedditData => 2,
            Tool::GetMacroIndicators => 60,
            Tool::GetInsiderTransactions => 30,
            Tool::GetEarningsEstimate => 90,
            Tool::GetBalanceSheet | Tool::GetCashflow | Tool::GetIncomeStatements | Tool::GetDividends => 365,
        }
    }

    fn category(self) -> Option<DocumentCategory> {
        match self {
            Tool::GetMarketData | Tool::GetStockIndicators => None,
            Tool::GetNewsData => Some(DocumentCategory::News),
            Tool::GetRedditData => Some(DocumentCategory::Reddit),
            Tool::GetMacroIndicators => Some(DocumentCategory::Macro),
            Tool::GetBalanceSheet => Some(DocumentCategory::BalanceSheet),
            Tool::GetCashflow => Some(DocumentCategory::Cashflow),
            Tool::GetIncomeStatements => Some(DocumentCategory::IncomeStatement),
            Tool::GetInsiderTransactions => Some(DocumentCategory::InsiderTransaction),
            Tool::GetDividends => Some(DocumentCategory::Dividend),
            Tool::GetEarningsEstimate => Some(DocumentCategory::EarningsEstimate),
        }
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tool::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown tool `{s}`"))
    }
}

/// A tool invocation as sent by the agent, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    #[serde(default)]
    pub arguments: Value,
}

impl ToolCall {
    pub fn new(name: impl Into<String>, arguments: Value) -> Self {
        Self { name: name.into(), arguments }
    }
}

/// A validated query action.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAction {
    pub tool: Tool,
    pub symbol: String,
    pub curr_date: NaiveDate,
    pub look_back_days: u64,
    pub indicator: Option<IndicatorKind>,
}

impl QueryAction {
    /// Checks a raw call against the tool's signature. `episode_date` bounds
    /// `curr_date` from above.
    pub fn parse(call: &ToolCall, corpus: &Corpus, episode_date: NaiveDate) -> Result<Self, String> {
        let tool: Tool = call.name.parse()?;
        let args = call
            .arguments
            .as_object()
            .ok_or_else(|| "arguments must be a JSON object".to_string())?;

        for key in args.keys() {
            let known = matches!(key.as_str(), "symbol" | "curr_date" | "look_back_days")
                || (key == "indicator" && tool == Tool::GetStockIndicators);
            if !known {
                return Err(format!("unexpected argument `{key}`"));
            }
        }

        let symbol = match args.get("symbol") {
            Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
            Some(_) => return Err("`symbol` must be a non-empty string".into()),
            None if tool == Tool::GetMacroIndicators => String::new(),
            None => return Err("missing required argument `symbol`".into()),
        };
        if tool != Tool::GetMacroIndicators && corpus.series(&symbol).is_none() {
            return Err(format!("unknown symbol `{symbol}`"));
        }

        let curr_date = match args.get("curr_date") {
            Some(Value::String(s)) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|_| "`curr_date` must be an ISO date (YYYY-MM-DD)".to_string())?,
            Some(_) => return Err("`curr_date` must be a string".into()),
            None => return Err("missing required argument `curr_date`".into()),
        };
        if curr_date > episode_date {
            // the offending date is not echoed back
            return Err(format!("`curr_date` must not be after the current date {episode_date}"));
        }

        let look_back_days = match args.get("look_back_days") {
            None => tool.default_look_back(),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| "`look_back_days` must be a non-negative integer".to_string())?,
        };

        let indicator = if tool == Tool::GetStockIndicators {
            match args.get("indicator") {
                Some(Value::String(s)) => Some(s.parse::<IndicatorKind>().map_err(|_| {
                    format!("`indicator` must be one of {}", IndicatorKind::NAMES.join(", "))
                })?),
                Some(_) => return Err("`indicator` must be a string".into()),
                None => return Err("missing required argument `indicator`".into()),
            }
        } else {
            None
        };

        Ok(QueryAction { tool, symbol, curr_date, look_back_days, indicator })
    }

    /// Builds the response text. Pure in `(self, corpus)`.
    pub fn respond(&self, corpus: &Corpus) -> String {
        let from = window_start(self.curr_date, self.look_back_days);
        match self.tool {
            Tool::GetMarketData => {
                let series = corpus.series(&self.symbol).expect("symbol validated");
                let window = series.between(from, self.curr_date);
                if window.is_empty() {
                    format!("No market data for {} from {from} to {}.", self.symbol, self.curr_date)
                } else {
                    render_bar_table(window.bars())
                }
            }
            Tool::GetStockIndicators => {
                let kind = self.indicator.expect("indicator validated");
                let history = corpus.series(&self.symbol).expect("symbol validated").up_to(self.curr_date);
                let series = compute_indicator(&history, kind)
                    .unwrap_or(IndicatorSeries { kind, points: Vec::new() });
                render_indicator_text(&series, self.curr_date, self.look_back_days)
            }
            tool => {
                let category = tool.category().expect("document tool");
                let docs = corpus.query_documents(category, &self.symbol, self.curr_date, self.look_back_days);
                render_documents(tool, &self.symbol, from, self.curr_date, &docs)
            }
        }
    }
}

/// Fixed-width table with a row index, right-aligned columns, two-space gaps.
pub fn render_bar_table(bars: &[Bar]) -> String {
    let headers = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"];
    let rows: Vec<[String; 7]> = bars
        .iter()
        .map(|b| {
            [
                b.date.to_string(),
                format!("{:.2}", b.open),
                format!("{:.2}", b.high),
                format!("{:.2}", b.low),
                format!("{:.2}", b.close),
                format!("{:.2}", b.adj_close),
                b.volume.to_string(),
            ]
        })
        .collect();
    let index_width = (rows.len().saturating_sub(1)).to_string().len();
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([headers[c].len()]).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    out.push_str(&" ".repeat(index_width));
    for (h, w) in headers.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    for (i, row) in rows.iter().enumerate() {
        let _ = write!(out, "\n{i:<index_width$}");
        for (cell, w) in row.iter().zip(&widths) {
            let _ = write!(out, "  {cell:>w$}");
        }
    }
    out
}

pub fn sentiment_label(score: f64) -> &'static str {
    if score <= -0.35 {
        "Bearish"
    } else if score <= -0.15 {
        "Somewhat-Bearish"
    } else if score < 0.15 {
        "Neutral"
    } else if score < 0.35 {
        "Somewhat-Bullish"
    } else {
        "Bullish"
    }
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_documents(tool: Tool, symbol: &str, from: NaiveDate, to: NaiveDate, docs: &[&Document]) -> String {
    let title = match tool {
        Tool::GetNewsData => format!("{symbol} News, from {from} to {to}:"),
        Tool::GetRedditData => format!("{symbol} Reddit posts, from {from} to {to}:"),
        Tool::GetMacroIndicators => format!("Macroeconomic indicators from {from} to {to}:"),
        Tool::GetBalanceSheet => format!("{symbol} balance sheets from {from} to {to}:"),
        Tool::GetCashflow => format!("{symbol} cash flow statements from {from} to {to}:"),
        Tool::GetIncomeStatements => format!("{symbol} income statements from {from} to {to}:"),
        Tool::GetInsiderTransactions => format!("{symbol} insider transactions from {from} to {to}:"),
        Tool::GetDividends => format!("{symbol} dividends from {from} to {to}:"),
        Tool::GetEarningsEstimate => format!("{symbol} earnings estimates from {from} to {to}:"),
        Tool::GetMarketData | Tool::GetStockIndicators => unreachable!("not a document tool"),
    };
    let mut out = format!("## {title}\n");
    if tool == Tool::GetNewsData {
        out.push_str(
            "Interpret the sentiment score x: values near 0 are Neutral, larger positive values indicate \
             increasingly Bullish, and larger negative values indicate increasingly Bearish.\n",
        );
    }
    if docs.is_empty() {
        out.push_str("No records found in this window.\n");
        return out;
    }
    for doc in docs {
        let date = doc.date;
        match &doc.payload {
            Payload::News(n) => {
                let _ = writeln!(
                    out,
                    "{date} [Sentiment score = {:.2}, {}] {}",
                    n.sentiment,
                    sentiment_label(n.sentiment),
                    n.headline
                );
            }
            Payload::Reddit(p) => {
                let _ = writeln!(out, "### {date} {}\n{}\n", p.title, p.summary);
            }
            Payload::Macro(m) => {
                let _ = writeln!(out, "{date} {}: {}", m.indicator, m.value);
            }
            Payload::Fundamentals(f) => {
                let _ = writeln!(out, "### Fiscal period ending {} (reported {date})", f.period);
                for (key, value) in &f.fields {
                    let _ = writeln!(out, "{key}: {}", fmt_value(value));
                }
                out.push('\n');
            }
            Payload::Insider(t) => {
                let direction = match t.direction {
                    TradeDirection::Acquisition => "Acquisition",
                    TradeDirection::Disposal => "Disposal",
                };
                let _ = writeln!(out, "### Transaction Date: {date}, {} ({})", t.name, t.role);
                if let Some(security) = &t.security {
                    let _ = writeln!(out, "Type: {security}");
                }
                let _ = writeln!(out, "Shares: {} ({direction})\n", t.shares);
            }
            Payload::Dividend(div) => {
                let _ = writeln!(out, "{date} Dividend per share: {}", div.amount);
            }
            Payload::EarningsEstimate(e) => {
                let _ = writeln!(
                    out,
                    "{date} {}: EPS estimate {}, revenue estimate {}, analysts {}",
                    e.horizon, e.eps_estimate, e.revenue_estimate, e.num_analysts
                );
            }
        }
    }
    out
}
