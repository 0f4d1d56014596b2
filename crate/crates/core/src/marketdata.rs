//! Point-in-time market data: daily bars, dated documents, and the corpus
//! that answers time-bounded queries.
//!
//! Every query takes a `curr_date` and never returns a record dated after it.
//! Look-back windows are measured in calendar days and are inclusive on both
//! ends, so `(curr_date = 2025-05-16, look_back_days = 14)` covers
//! 2025-05-02 through 2025-05-16.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Symbol used for documents that are not bound to a ticker (macro series).
pub const GLOBAL_SYMBOL: &str = "GLOBAL";

pub const BARS_CSV_HEADER: [&str; 7] = ["date", "open", "high", "low", "close", "adj_close", "volume"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketDataError {
    /// `line` is the 1-based data row (the header is line 0).
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("dates not strictly increasing at row {line}")]
    NonMonotonicDates { line: usize },
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("{curr_date} precedes the first bar of {symbol}")]
    DateBeforeSeries { symbol: String, curr_date: NaiveDate },
    #[error("unknown document category `{0}`")]
    UnknownCategory(String),
    #[error("malformed document in {file} line {line}: {reason}")]
    MalformedDocument { file: String, line: usize, reason: String },
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

pub type Result<T, E = MarketDataError> = std::result::Result<T, E>;

/// Which bar field drives simulation and reward prices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceField {
    #[default]
    Close,
    AdjClose,
}

/// One trading day of OHLCV data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: u64,
}

impl Bar {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let prices = [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
            ("adj_close", self.adj_close),
        ];
        for (name, p) in prices {
            if !(p.is_finite() && p > 0.0) {
                return Err(format!("{name} must be a positive finite price, got {p}"));
            }
        }
        if self.low > self.high {
            return Err(format!("low {} above high {}", self.low, self.high));
        }
        if self.open < self.low || self.open > self.high {
            return Err(format!("open {} outside [low, high]", self.open));
        }
        if self.close < self.low || self.close > self.high {
            return Err(format!("close {} outside [low, high]", self.close));
        }
        Ok(())
    }

    pub fn price(&self, field: PriceField) -> f64 {
        match field {
            PriceField::Close => self.close,
            PriceField::AdjClose => self.adj_close,
        }
    }
}

/// Bars for one symbol, strictly increasing by date.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarSeries {
    symbol: String,
    bars: Vec<Bar>,
}

impl BarSeries {
    /// Validates every bar and the date ordering. Errors carry 1-based row
    /// numbers.
    pub fn new(symbol: impl Into<String>, bars: Vec<Bar>) -> Result<Self> {
        for (i, bar) in bars.iter().enumerate() {
            bar.validate()
                .map_err(|reason| MarketDataError::MalformedRow { line: i + 1, reason })?;
            if i > 0 && bars[i - 1].date >= bar.date {
                return Err(MarketDataError::NonMonotonicDates { line: i + 1 });
            }
        }
        Ok(Self { symbol: symbol.into(), bars })
    }

    /// Parses the bars CSV format (`date,open,high,low,close,adj_close,volume`).
    pub fn from_csv_reader<R: Read>(symbol: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| MarketDataError::MalformedRow { line: 0, reason: e.to_string() })?
            .clone();
        if headers.iter().ne(BARS_CSV_HEADER.iter().copied()) {
            return Err(MarketDataError::MalformedRow {
                line: 0,
                reason: format!("expected header `{}`", BARS_CSV_HEADER.join(",")),
            });
        }

        let mut bars: Vec<Bar> = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 1;
            let record =
                record.map_err(|e| MarketDataError::MalformedRow { line, reason: e.to_string() })?;
            let bar = parse_bar_record(&record)
                .map_err(|reason| MarketDataError::MalformedRow { line, reason })?;
            bar.validate().map_err(|reason| MarketDataError::MalformedRow { line, reason })?;
            if let Some(prev) = bars.last() {
                if prev.date >= bar.date {
                    return Err(MarketDataError::NonMonotonicDates { line });
                }
            }
            bars.push(bar);
        }
        if bars.is_empty() {
            return Err(MarketDataError::EmptyFile);
        }
        Ok(Self { symbol: symbol.into(), bars })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.bars.first().map(|b| b.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.bars.last().map(|b| b.date)
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn prices(&self, field: PriceField) -> Vec<f64> {
        self.bars.iter().map(|b| b.price(field)).collect()
    }

    /// Index of the bar dated exactly `date`.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.bars.binary_search_by_key(&date, |b| b.date).ok()
    }

    /// Number of bars dated on or before `date`.
    fn count_through(&self, date: NaiveDate) -> usize {
        self.bars.partition_point(|b| b.date <= date)
    }

    /// All bars dated on or before `date`.
    pub fn up_to(&self, date: NaiveDate) -> BarSeries {
        self.sub_series(0, self.count_through(date))
    }

    /// Bars dated within the inclusive range `[from, to]`.
    pub fn between(&self, from: NaiveDate, to: NaiveDate) -> BarSeries {
        let start = self.bars.partition_point(|b| b.date < from);
        let end = self.count_through(to).max(start);
        self.sub_series(start, end)
    }

    pub fn sub_series(&self, start: usize, end: usize) -> BarSeries {
        BarSeries { symbol: self.symbol.clone(), bars: self.bars[start..end].to_vec() }
    }

    /// Bars dated in `[curr_date - look_back_days, curr_date]`.
    pub fn window(&self, curr_date: NaiveDate, look_back_days: u64) -> Result<BarSeries> {
        match self.first_date() {
            Some(first) if curr_date >= first => {
                Ok(self.between(window_start(curr_date, look_back_days), curr_date))
            }
            _ => Err(MarketDataError::DateBeforeSeries {
                symbol: self.symbol.clone(),
                curr_date,
            }),
        }
    }
}

fn parse_bar_record(record: &csv::StringRecord) -> std::result::Result<Bar, String> {
    if record.len() != BARS_CSV_HEADER.len() {
        return Err(format!("expected {} fields, got {}", BARS_CSV_HEADER.len(), record.len()));
    }
    let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
        .map_err(|e| format!("bad date `{}`: {e}", &record[0]))?;
    let price = |idx: usize| -> std::result::Result<f64, String> {
        record[idx]
            .parse::<f64>()
            .map_err(|e| format!("bad {} `{}`: {e}", BARS_CSV_HEADER[idx], &record[idx]))
    };
    let volume = record[6]
        .parse::<u64>()
        .map_err(|e| format!("bad volume `{}`: {e}", &record[6]))?;
    Ok(Bar {
        date,
        open: price(1)?,
        high: price(2)?,
        low: price(3)?,
        close: price(4)?,
        adj_close: price(5)?,
        volume,
    })
}

/// First calendar day of an inclusive look-back window.
pub fn window_start(curr_date: NaiveDate, look_back_days: u64) -> NaiveDate {
    curr_date.checked_sub_days(Days::new(look_back_days)).unwrap_or(NaiveDate::MIN)
}

pub fn ingest_bars(path: impl AsRef<Path>, symbol: &str) -> Result<BarSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    BarSeries::from_csv_reader(symbol, BufReader::new(file))
}

fn io_error(path: &Path, e: impl fmt::Display) -> MarketDataError {
    MarketDataError::Io { path: path.to_path_buf(), reason: e.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentCategory {
    News,
    Reddit,
    Macro,
    BalanceSheet,
    Cashflow,
    IncomeStatement,
    InsiderTransaction,
    Dividend,
    EarningsEstimate,
}

impl DocumentCategory {
    pub const ALL: [DocumentCategory; 9] = [
        DocumentCategory::News,
        DocumentCategory::Reddit,
        DocumentCategory::Macro,
        DocumentCategory::BalanceSheet,
        DocumentCategory::Cashflow,
        DocumentCategory::IncomeStatement,
        DocumentCategory::InsiderTransaction,
        DocumentCategory::Dividend,
        DocumentCategory::EarningsEstimate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DocumentCategory::News => "news",
            DocumentCategory::Reddit => "reddit",
            DocumentCategory::Macro => "macro",
            DocumentCategory::BalanceSheet => "balance_sheet",
            DocumentCategory::Cashflow => "cashflow",
            DocumentCategory::IncomeStatement => "income_statement",
            DocumentCategory::InsiderTransaction => "insider_transaction",
            DocumentCategory::Dividend => "dividend",
            DocumentCategory::EarningsEstimate => "earnings_estimate",
        }
    }
}

impl fmt::Display for DocumentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocumentCategory {
    type Err = MarketDataError;

    fn from_str(s: &str) -> Result<Self> {
        DocumentCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| MarketDataError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsItem {
    pub headline: String,
    pub summary: String,
    pub sentiment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedditPost {
    pub title: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroObservation {
    pub indicator: String,
    pub value: f64,
}

/// Balance sheet, cash flow and income statement share this shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalsReport {
    pub period: String,
    pub fields: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeDirection {
    Acquisition,
    Disposal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsiderTransaction {
    pub name: String,
    pub role: String,
    pub shares: f64,
    pub direction: TradeDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub security: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DividendRecord {
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarningsEstimate {
    pub horizon: String,
    pub eps_estimate: f64,
    pub revenue_estimate: f64,
    pub num_analysts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    News(NewsItem),
    Reddit(RedditPost),
    Macro(MacroObservation),
    Fundamentals(FundamentalsReport),
    Insider(InsiderTransaction),
    Dividend(DividendRecord),
    EarningsEstimate(EarningsEstimate),
}

impl Payload {
    /// Decodes the payload keys required for `category` from a JSON object.
    pub fn from_json(category: DocumentCategory, value: Value) -> std::result::Result<Self, String> {
        fn decode<T: serde::de::DeserializeOwned>(v: Value) -> std::result::Result<T, String> {
            serde_json::from_value(v).map_err(|e| e.to_string())
        }
        let payload = match category {
            DocumentCategory::News => Payload::News(decode(value)?),
            DocumentCategory::Reddit => Payload::Reddit(decode(value)?),
            DocumentCategory::Macro => Payload::Macro(decode(value)?),
            DocumentCategory::BalanceSheet
            | DocumentCategory::Cashflow
            | DocumentCategory::IncomeStatement => Payload::Fundamentals(decode(value)?),
            DocumentCategory::InsiderTransaction => Payload::Insider(decode(value)?),
            DocumentCategory::Dividend => Payload::Dividend(decode(value)?),
            DocumentCategory::EarningsEstimate => Payload::EarningsEstimate(decode(value)?),
        };
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("{what} must be finite"))
            }
        };
        match &payload {
            Payload::News(n) => finite(n.sentiment, "sentiment")?,
            Payload::Macro(m) => finite(m.value, "value")?,
            Payload::Insider(t) if t.shares < 0.0 => return Err("shares must be non-negative".into()),
            _ => {}
        }
        Ok(payload)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document {
    pub date: NaiveDate,
    pub category: DocumentCategory,
    pub symbol: String,
    pub payload: Payload,
}

impl Document {
    /// Parses one JSON-lines record. Macro records are always filed under
    /// [`GLOBAL_SYMBOL`].
    pub fn from_json_line(category: DocumentCategory, line: &str) -> std::result::Result<Self, String> {
        let mut value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let obj = value.as_object_mut().ok_or("record is not a JSON object")?;
        let date = obj
            .remove("date")
            .and_then(|d| d.as_str().map(str::to_owned))
            .ok_or("missing string key `date`")?;
        let date = NaiveDate::parse_from_str(&date, "%Y-%m-%d")
            .map_err(|e| format!("bad date `{date}`: {e}"))?;
        let symbol = obj
            .remove("symbol")
            .and_then(|s| s.as_str().map(str::to_owned))
            .ok_or("missing string key `symbol`")?;
        let symbol = if category == DocumentCategory::Macro { GLOBAL_SYMBOL.to_string() } else { symbol };
        let payload = Payload::from_json(category, value)?;
        Ok(Document { date, category, symbol, payload })
    }
}

/// Immutable store of bar series and documents.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    series: BTreeMap<String, BarSeries>,
    documents: BTreeMap<(DocumentCategory, String), Vec<Document>>,
    price_field: PriceField,
}

#[derive(Debug, Default)]
pub struct CorpusBuilder {
    corpus: Corpus,
}

impl CorpusBuilder {
    pub fn series(mut self, series: BarSeries) -> Self {
        self.corpus.series.insert(series.symbol.clone(), series);
        self
    }

    pub fn document(mut self, doc: Document) -> Self {
        self.corpus
            .documents
            .entry((doc.category, doc.symbol.clone()))
            .or_default()
            .push(doc);
        self
    }

    pub fn price_field(mut self, field: PriceField) -> Self {
        self.corpus.price_field = field;
        self
    }

    pub fn build(mut self) -> Corpus {
        // stable: same-day documents keep file order
        for docs in self.corpus.documents.values_mut() {
            docs.sort_by_key(|d| d.date);
        }
        self.corpus
    }
}

impl Corpus {
    pub fn builder() -> CorpusBuilder {
        CorpusBuilder::default()
    }

    /// Loads `<dir>/bars/<SYMBOL>.csv` and `<dir>/documents/<category>.jsonl`.
    /// Either subdirectory may be absent.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Corpus> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(io_error(dir, "corpus directory not found"));
        }
        let mut builder = Corpus::builder();

        let bars_dir = dir.join("bars");
        if bars_dir.is_dir() {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&bars_dir)
                .map_err(|e| io_error(&bars_dir, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
                .collect();
            paths.sort();
            for path in paths {
                let symbol = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| io_error(&path, "non UTF-8 file name"))?
                    .to_string();
                let series = ingest_bars(&path, &symbol).map_err(|e| match e {
                    MarketDataError::Io { .. } => e,
                    other => io_error(&path, other),
                })?;
                builder = builder.series(series);
            }
        }

        let docs_dir = dir.join("documents");
        for category in DocumentCategory::ALL {
            let path = docs_dir.join(format!("{}.jsonl", category.as_str()));
            if !path.is_file() {
                continue;
            }
            let file = File::open(&path).map_err(|e| io_error(&path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| io_error(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let doc = Document::from_json_line(category, &line).map_err(|reason| {
                    MarketDataError::MalformedDocument {
                        file: path.display().to_string(),
                        line: i + 1,
                        reason,
                    }
                })?;
                builder = builder.document(doc);
            }
        }
        Ok(builder.build())
    }

    pub fn series(&self, symbol: &str) -> Option<&BarSeries> {
        self.series.get(symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn price_field(&self) -> PriceField {
        self.price_field
    }

    pub fn with_price_field(mut self, field: PriceField) -> Self {
        self.price_field = field;
        self
    }

    pub fn document_count(&self) -> usize {
        self.documents.values().map(Vec::len).sum()
    }

    /// Documents of `category` for `symbol` dated in
    /// `[curr_date - look_back_days, curr_date]`, ascending by date. Macro
    /// queries ignore `symbol`.
    pub fn query_documents(
        &self,
        category: DocumentCategory,
        symbol: &str,
        curr_date: NaiveDate,
        look_back_days: u64,
    ) -> Vec<&Document> {
        let symbol = if category == DocumentCategory::Macro { GLOBAL_SYMBOL } else { symbol };
        let Some(docs) = self.documents.get(&(category, symbol.to_string())) else {
            return Vec::new();
        };
        let from = window_start(curr_date, look_back_days);
        let start = docs.partition_point(|d| d.date < from);
        let end = docs.partition_point(|d| d.date <= curr_date).max(start);
        docs[start..end].iter().collect()
    }

    /// As [`Corpus::query_documents`], with the category given by name.
    pub fn query_documents_named(
        &self,
        category: &str,
        symbol: &str,
        curr_date: NaiveDate,
        look_back_days: u64,
    ) -> Result<Vec<&Document>> {
        let category = category.parse()?;
        Ok(self.query_documents(category, symbol, curr_date, look_back_days))
    }
}
