mod agent;
mod backtest;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use quantgym::baselines::StrategyKind;
use quantgym::config::EngineConfig;
use quantgym::indicators::{compute_indicator, render_indicator_text, IndicatorKind};
use quantgym::marketdata::{ingest_bars, BARS_CSV_HEADER};
use quantgym::reward::score_trajectory;
use quantgym::{BarSeries, Corpus, Trajectory};
use quantgym_service::{AppState, ServiceConfig, DEFAULT_IDLE_TIMEOUT};

use crate::backtest::{BacktestArgs, SignalSource};
use crate::error::{CliError, Result};
use crate::output::write_atomic;

#[derive(Parser)]
#[command(name = "quantgym", version, about = "Trading-agent environment: backtests, scoring and the episode server")]
struct Cli {
    /// Corpus directory holding bars/<SYMBOL>.csv and documents/<category>.jsonl.
    #[arg(long, global = true, default_value = "fixtures/corpus")]
    corpus: PathBuf,
    /// Flat TOML file with reward and backtest settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a bars CSV and copy it into the corpus.
    Ingest {
        file: PathBuf,
        #[arg(long)]
        symbol: String,
        /// Only validate.
        #[arg(long)]
        check: bool,
    },
    /// Run a backtest from a baseline strategy, a decisions file or an agent.
    Backtest(BacktestCmd),
    /// Score a trajectory file.
    Score {
        trajectory: PathBuf,
        /// Bars CSV for the trajectory's symbol; defaults to the corpus series.
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Serve episodes over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: std::net::SocketAddr,
        /// Also write finished trajectories here.
        #[arg(long)]
        trajectory_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_IDLE_TIMEOUT.as_secs())]
        idle_timeout_secs: u64,
    },
    /// Print an indicator series for a symbol.
    Indicators {
        #[arg(long)]
        symbol: String,
        /// One of SMA, EMA, VWMA, RSI, STOCH, CCI, BBANDS, ATR, OBV, CMF, MACD.
        #[arg(long)]
        indicator: String,
        /// Last date of the window; defaults to the last bar.
        #[arg(long)]
        date: Option<NaiveDate>,
        #[arg(long, default_value_t = 14)]
        look_back_days: u64,
        #[arg(long, value_enum, default_value_t = IndicatorFormat::Text)]
        format: IndicatorFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IndicatorFormat {
    /// As the get_stock_indicators tool renders it.
    Text,
    /// `date,value[,...]` at full precision over the whole window.
    Csv,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["strategy", "decisions", "agent"]))]
struct BacktestCmd {
    /// Repeat for several symbols.
    #[arg(long = "symbol", required = true)]
    symbols: Vec<String>,
    #[arg(long)]
    start: NaiveDate,
    #[arg(long)]
    end: NaiveDate,
    /// buy-and-hold, macd or zmr.
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// CSV with `date,action` or `symbol,date,action` rows.
    #[arg(long)]
    decisions: Option<PathBuf>,
    /// Agent endpoint URL.
    #[arg(long)]
    agent: Option<String>,
    #[arg(long, default_value_t = 300)]
    agent_timeout_secs: u64,
    /// Also write the cross-symbol mean of ARR, SR and MDD.
    #[arg(long)]
    average: bool,
    /// Also write an equity-curve SVG per symbol.
    #[arg(long)]
    svg: bool,
    /// Also write the per-day signals as CSV.
    #[arg(long)]
    export_signals: bool,
    /// Leave the generation timestamp out of report files.
    #[arg(long)]
    no_timestamp: bool,
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    Ok(match path {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::default(),
    })
}

fn load_corpus(dir: &Path, cfg: &EngineConfig) -> Result<Arc<Corpus>> {
    Ok(Arc::new(Corpus::load_dir(dir)?.with_price_field(cfg.backtest.price_field)))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { file, symbol, check } => {
            let series = ingest_bars(&file, &symbol)?;
            println!(
                "{symbol}: {} bars {}..{}",
                series.len(),
                series.first_date().expect("non-empty"),
                series.last_date().expect("non-empty")
            );
            if !check {
                let dest = cli.corpus.join("bars").join(format!("{symbol}.csv"));
                write_atomic(&dest, &bars_csv(&series))?;
                println!("wrote {}", dest.display());
            }
            Ok(())
        }
        Command::Backtest(cmd) => {
            let corpus = load_corpus(&cli.corpus, &cfg)?;
            let source = if let Some(kind) = cmd.strategy {
                SignalSource::Strategy(kind)
            } else if let Some(path) = cmd.decisions {
                SignalSource::Decisions(path)
            } else {
                let url = cmd.agent.expect("clap enforces one source");
                let service = ServiceConfig { reward: cfg.reward.clone(), ..ServiceConfig::default() };
                let timeout = Duration::from_secs(cmd.agent_timeout_secs);
                SignalSource::Agent(agent::AgentRunner::start(corpus.clone(), service, &url, timeout)?)
            };
            let args = BacktestArgs {
                symbols: cmd.symbols,
                start: cmd.start,
                end: cmd.end,
                average: cmd.average,
                svg: cmd.svg,
                export_signals: cmd.export_signals,
                timestamp: !cmd.no_timestamp,
                out: cli.out,
            };
            backtest::run(&corpus, &cfg.backtest, &source, &args)
        }
        Command::Score { trajectory, prices } => {
            let text = std::fs::read_to_string(&trajectory)
                .map_err(|e| CliError::Input(format!("{}: {e}", trajectory.display())))?;
            let traj = Trajectory::from_jsonl(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", trajectory.display())))?;
            let series = match prices {
                Some(path) => ingest_bars(&path, &traj.symbol)?,
                None => load_corpus(&cli.corpus, &cfg)?
                    .series(&traj.symbol)
                    .cloned()
                    .ok_or_else(|| CliError::Domain(format!("corpus has no series for `{}`", traj.symbol)))?,
            };
            let breakdown = score_trajectory(&traj, &series, cfg.backtest.price_field, &cfg.reward)?;
            let json = serde_json::to_string_pretty(&breakdown).expect("breakdown serializes") + "\n";
            let stem = trajectory.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
            write_atomic(&cli.out.join(format!("score_{stem}.json")), &json)?;
            print!("{json}");
            Ok(())
        }
        Command::Serve { listen, trajectory_dir, idle_timeout_secs } => {
            let corpus = load_corpus(&cli.corpus, &cfg)?;
            let config = ServiceConfig {
                reward: cfg.reward,
                idle_timeout: Duration::from_secs(idle_timeout_secs),
                trajectory_dir,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::input)?;
            runtime.block_on(async {
                let (addr, server) = quantgym_service::bind(listen, AppState::new(corpus, config))
                    .await
                    .map_err(|e| CliError::Input(format!("cannot listen on {listen}: {e}")))?;
                eprintln!("listening on http://{addr}");
                tokio::select! {
                    r = server => r.map_err(CliError::input),
                    _ = tokio::signal::ctrl_c() => Ok(()),
                }
            })
        }
        Command::Indicators { symbol, indicator, date, look_back_days, format } => {
            let corpus = load_corpus(&cli.corpus, &cfg)?;
            let kind: IndicatorKind = indicator.parse()?;
            let series = corpus
                .series(&symbol)
                .ok_or_else(|| CliError::Domain(format!("unknown symbol `{symbol}`")))?;
            let date = date.unwrap_or_else(|| series.last_date().expect("non-empty"));
            let history = series.up_to(date);
            let values = compute_indicator(&history, kind)?;
            match format {
                IndicatorFormat::Text => println!("{}", render_indicator_text(&values, date, look_back_days)),
                IndicatorFormat::Csv => {
                    let from = quantgym::marketdata::window_start(date, look_back_days);
                    let windowed = quantgym::IndicatorSeries {
                        kind,
                        points: values.points.into_iter().filter(|(d, _)| *d >= from).collect(),
                    };
                    print!("{}", windowed.to_csv());
                }
            }
            Ok(())
        }
    }
}

fn bars_csv(series: &BarSeries) -> String {
    let mut out = BARS_CSV_HEADER.join(",") + "\n";
    for b in series.bars() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            b.date, b.open, b.high, b.low, b.close, b.adj_close, b.volume
        ));
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
