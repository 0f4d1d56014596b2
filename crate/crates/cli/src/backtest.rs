use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use quantgym::backtest::{run_backtest, BacktestReport, Metrics};
use quantgym::baselines::{signals_to_csv, StrategyKind};
use quantgym::svg::equity_curve_svg;
use quantgym::{BacktestConfig, BarSeries, Corpus, Decision};
use rayon::prelude::*;
use serde::Serialize;

use crate::agent::AgentRunner;
use crate::error::{CliError, Result};
use crate::output::write_atomic;

pub enum SignalSource {
    Strategy(StrategyKind),
    /// `date,action` rows, optionally with a leading `symbol` column.
    Decisions(PathBuf),
    Agent(AgentRunner),
}

impl SignalSource {
    fn label(&self) -> &'static str {
        match self {
            SignalSource::Strategy(k) => k.cli_name(),
            SignalSource::Decisions(_) => "decisions",
            SignalSource::Agent(_) => "agent",
        }
    }
}

pub struct BacktestArgs {
    pub symbols: Vec<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub average: bool,
    pub svg: bool,
    pub export_signals: bool,
    pub timestamp: bool,
    pub out: PathBuf,
}

/// Decision days and the bars they execute on.
struct Window {
    /// Full history through the last execution day.
    history: BarSeries,
    /// Index in `history` of the first decision day.
    first: usize,
}

impl Window {
    fn decision_days(&self) -> &[quantgym::Bar] {
        &self.history.bars()[self.first..self.history.len() - 1]
    }

    fn prices(&self) -> BarSeries {
        self.history.sub_series(self.first, self.history.len())
    }
}

fn window(series: &BarSeries, start: NaiveDate, end: NaiveDate) -> Result<Window> {
    let (first, last) = (series.first_date().unwrap(), series.last_date().unwrap());
    if start > end || start < first || end > last {
        return Err(CliError::Domain(format!(
            "{}: range {start}..{end} lies outside corpus coverage {first}..{last}",
            series.symbol()
        )));
    }
    let lo = series.bars().partition_point(|b| b.date < start);
    let mut hi = series.bars().partition_point(|b| b.date <= end);
    if hi == series.len() {
        eprintln!(
            "warning: {}: {last} has no next trading day to execute on; last decision day moves back one bar",
            series.symbol()
        );
        hi -= 1;
    }
    if hi <= lo {
        return Err(CliError::Domain(format!("{}: no executable decision days in {start}..{end}", series.symbol())));
    }
    Ok(Window { history: series.sub_series(0, hi + 1), first: lo })
}

#[derive(Serialize)]
struct ReportFile<'a> {
    source: &'a str,
    #[serde(flatten)]
    report: &'a BacktestReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<String>,
}

#[derive(Serialize)]
struct AverageFile<'a> {
    source: &'a str,
    symbols: Vec<&'a str>,
    metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<String>,
}

type DecisionTable = BTreeMap<(Option<String>, NaiveDate), Decision>;

fn read_decisions(path: &Path) -> Result<DecisionTable> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(CliError::input)?.clone();
    let with_symbol = match headers.iter().collect::<Vec<_>>().as_slice() {
        ["date", "action"] => false,
        ["symbol", "date", "action"] => true,
        _ => {
            return Err(CliError::Input(format!(
                "{}: header must be `date,action` or `symbol,date,action`",
                path.display()
            )))
        }
    };
    let mut table = DecisionTable::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let bad = |reason: String| CliError::Input(format!("{} line {line}: {reason}", path.display()));
        let record = record.map_err(|e| bad(e.to_string()))?;
        let offset = usize::from(with_symbol);
        let date: NaiveDate = record[offset].trim().parse().map_err(|e| bad(format!("bad date: {e}")))?;
        let action: Decision = record[offset + 1].trim().parse().map_err(bad)?;
        let symbol = with_symbol.then(|| record[0].trim().to_string());
        if table.insert((symbol, date), action).is_some() {
            return Err(bad(format!("duplicate decision for {date}")));
        }
    }
    Ok(table)
}

fn lookup(table: &DecisionTable, symbol: &str, date: NaiveDate) -> Option<Decision> {
    table.get(&(Some(symbol.to_string()), date)).or_else(|| table.get(&(None, date))).copied()
}

fn signals_for(source: &SignalSource, table: Option<&DecisionTable>, w: &Window) -> Result<Vec<Decision>> {
    let symbol = w.history.symbol();
    match source {
        SignalSource::Strategy(kind) => {
            // baselines only look backwards, so full history gives the warm-up
            let all = kind.signals(&w.history)?;
            Ok(all[w.first..w.history.len() - 1].to_vec())
        }
        SignalSource::Decisions(path) => {
            let table = table.expect("decisions loaded");
            w.decision_days()
                .iter()
                .map(|b| {
                    lookup(table, symbol, b.date).ok_or_else(|| {
                        CliError::Input(format!("{}: no decision for {symbol} on {}", path.display(), b.date))
                    })
                })
                .collect()
        }
        SignalSource::Agent(runner) => w.decision_days().iter().map(|b| runner.decide(symbol, b.date)).collect(),
    }
}

pub fn run(corpus: &Corpus, cfg: &BacktestConfig, source: &SignalSource, args: &BacktestArgs) -> Result<()> {
    let windows: Vec<Window> = args
        .symbols
        .iter()
        .map(|s| {
            let series = corpus.series(s).ok_or_else(|| CliError::Domain(format!("unknown symbol `{s}`")))?;
            window(series, args.start, args.end)
        })
        .collect::<Result<_>>()?;
    let table = match source {
        SignalSource::Decisions(path) => Some(read_decisions(path)?),
        _ => None,
    };

    let simulate = |w: &Window| -> Result<(Vec<Decision>, BacktestReport)> {
        let signals = signals_for(source, table.as_ref(), w)?;
        let report = run_backtest(&signals, &w.prices(), cfg)?;
        Ok((signals, report))
    };
    let results: Vec<(Vec<Decision>, BacktestReport)> = match source {
        SignalSource::Agent(_) => windows.iter().map(simulate).collect::<Result<_>>()?,
        _ => windows.par_iter().map(simulate).collect::<Result<_>>()?,
    };

    let generated_at = args.timestamp.then(|| chrono::Utc::now().to_rfc3339());
    let label = source.label();
    for (w, (signals, report)) in windows.iter().zip(&results) {
        let stem = format!("backtest_{}_{label}", report.symbol);
        let file = ReportFile { source: label, report, generated_at: generated_at.clone() };
        let json = serde_json::to_string_pretty(&file).expect("report serializes") + "\n";
        write_atomic(&args.out.join(format!("{stem}.json")), &json)?;
        if args.svg {
            write_atomic(&args.out.join(format!("{stem}.svg")), &equity_curve_svg(report))?;
        }
        if args.export_signals {
            let days = w.history.sub_series(w.first, w.history.len() - 1);
            write_atomic(&args.out.join(format!("{stem}.signals.csv")), &signals_to_csv(&days, signals))?;
        }
        let m = report.metrics;
        println!("{}\tARR={:.4}\tSR={:.4}\tMDD={:.4}", report.symbol, m.arr, m.sr, m.mdd);
    }

    if args.average {
        let metrics: Vec<Metrics> = results.iter().map(|(_, r)| r.metrics).collect();
        let avg = Metrics::average(&metrics).expect("at least one symbol");
        let file = AverageFile {
            source: label,
            symbols: results.iter().map(|(_, r)| r.symbol.as_str()).collect(),
            metrics: avg,
            generated_at,
        };
        let json = serde_json::to_string_pretty(&file).expect("average serializes") + "\n";
        write_atomic(&args.out.join(format!("average_{label}.json")), &json)?;
        println!("Average\tARR={:.4}\tSR={:.4}\tMDD={:.4}", avg.arr, avg.sr, avg.mdd);
    }
    Ok(())
}
