mod common;

use common::{bars_from_closes, close_rel, flat_bars, oracle, random_bars, rng};
use proptest::prelude::*;
use quantgym::backtest::{arr, mdd, run_backtest, sharpe, step_portfolio, BacktestError, Metrics};
use quantgym::{BacktestConfig, Decision, PortfolioState};
use rand::Rng;

fn action(i: u8) -> Decision {
    [Decision::Buy, Decision::Sell, Decision::Hold][(i % 3) as usize]
}

fn random_values(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v = vec![r.random_range(1_000.0..50_000.0)];
    for _ in 1..n {
        let last = *v.last().unwrap();
        v.push(last * (1.0 + r.random_range(-0.05..0.05)));
    }
    v
}

#[test]
fn metrics_match_brute_force() {
    let mut r = rng(21);
    for _ in 0..1000 {
        let v = random_values(&mut r, 31);
        assert!(close_rel(arr(&v).unwrap(), oracle::arr(&v), 1e-12));
        assert!(close_rel(sharpe(&v).unwrap(), oracle::sharpe(&v), 1e-12));
        assert!(close_rel(mdd(&v).unwrap(), oracle::mdd(&v), 1e-12));
    }
}

#[test]
fn drawdown_ignores_initial_capital() {
    // V_0 is above every later value, yet only V_1..V_T set the peak
    let v = [100.0, 90.0, 95.0, 80.0];
    assert!(close_rel(mdd(&v).unwrap(), (95.0 - 80.0) / 95.0, 1e-15));
}

#[test]
fn all_hold_is_zero() {
    let s = flat_bars(30, 50.0);
    let rep = run_backtest(&vec![Decision::Hold; 29], &s, &BacktestConfig::default()).unwrap();
    assert_eq!(rep.metrics, Metrics { arr: 0.0, sr: 0.0, mdd: 0.0 });
    let rep = run_backtest(&vec![Decision::Hold; 59], &random_bars(&mut rng(3), 60), &BacktestConfig::default()).unwrap();
    assert_eq!(rep.metrics, Metrics { arr: 0.0, sr: 0.0, mdd: 0.0 });
    assert!(rep.trades.is_empty());
}

#[test]
fn signal_count_must_leave_an_execution_day() {
    let s = flat_bars(5, 10.0);
    let cfg = BacktestConfig::default();
    assert!(matches!(run_backtest(&[Decision::Hold; 5], &s, &cfg), Err(BacktestError::MissingExecutionDay { .. })));
    assert!(matches!(run_backtest(&[Decision::Hold; 3], &s, &cfg), Err(BacktestError::LengthMismatch { .. })));
}

#[test]
fn repeated_buy_uses_remaining_cash() {
    let cfg = BacktestConfig::default();
    let s1 = step_portfolio(PortfolioState::all_cash(10_000.0), Decision::Buy, 100.0, &cfg).unwrap();
    assert_eq!(s1.shares, 90);
    let s2 = step_portfolio(s1, Decision::Buy, 100.0, &cfg).unwrap();
    assert_eq!(s2.shares, 90 + (0.9 * s1.cash / 100.0).floor() as u64);
}

proptest! {
    #[test]
    fn trades_cost_exactly_the_fee(
        shares in 0u64..10_000,
        cash in 0.0f64..1e6,
        price in 0.01f64..5_000.0,
        a in 0u8..3,
        lambda in 0.0f64..0.01,
    ) {
        let cfg = BacktestConfig { lambda, ..BacktestConfig::default() };
        let before = PortfolioState { shares, cash };
        let after = step_portfolio(before, action(a), price, &cfg).unwrap();
        let notional = after.shares.abs_diff(before.shares) as f64 * price;
        let delta = after.value(price) - before.value(price);
        prop_assert!((delta + lambda * notional).abs() <= 1e-9 * before.value(price).max(1.0));
        prop_assert!(after.cash >= 0.0);
    }

    #[test]
    fn cash_and_shares_stay_non_negative(
        seed in any::<u64>(),
        acts in prop::collection::vec(0u8..3, 1..80),
    ) {
        let s = random_bars(&mut rng(seed), acts.len() + 1);
        let mut state = PortfolioState::all_cash(10_000.0);
        let cfg = BacktestConfig::default();
        for (a, bar) in acts.iter().zip(&s.bars()[1..]) {
            let next = step_portfolio(state, action(*a), bar.close, &cfg).unwrap();
            prop_assert!(next.cash >= 0.0);
            if action(*a) == Decision::Sell {
                prop_assert_eq!(next.shares, 0);
            }
            state = next;
        }
    }

    #[test]
    fn report_metrics_recompute_exactly(seed in any::<u64>(), acts in prop::collection::vec(0u8..3, 2..60)) {
        let s = random_bars(&mut rng(seed), acts.len() + 1);
        let signals: Vec<Decision> = acts.iter().map(|a| action(*a)).collect();
        let rep = run_backtest(&signals, &s, &BacktestConfig::default()).unwrap();
        prop_assert_eq!(rep.values.len(), rep.t + 1);
        prop_assert_eq!(Metrics::from_values(&rep.values).unwrap(), rep.metrics);
        let parsed: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        let values: Vec<f64> = serde_json::from_value(parsed["values"].clone()).unwrap();
        prop_assert_eq!(Metrics::from_values(&values).unwrap(), rep.metrics);
    }

    #[test]
    fn metrics_invariant_in_initial_capital(
        seed in any::<u64>(),
        acts in prop::collection::vec(0u8..3, 2..40),
        scale in 1u32..20,
    ) {
        // prices and capital scaled together keep share counts identical
        let s = random_bars(&mut rng(seed), acts.len() + 1);
        let signals: Vec<Decision> = acts.iter().map(|a| action(*a)).collect();
        let base = BacktestConfig::default();
        let big = BacktestConfig { initial_cash: base.initial_cash * scale as f64, ..base.clone() };
        let closes: Vec<f64> = s.closes();
        let a = run_backtest(&signals, &bars_from_closes(&closes), &base).unwrap();
        let b = run_backtest(&signals, &bars_from_closes(&closes), &big).unwrap();
        if a.trades.iter().zip(&b.trades).all(|(x, y)| x.shares * scale as u64 == y.shares) && a.trades.len() == b.trades.len() {
            prop_assert!(close_rel(a.metrics.arr, b.metrics.arr, 1e-9));
            prop_assert!(close_rel(a.metrics.sr, b.metrics.sr, 1e-9));
            prop_assert!(close_rel(a.metrics.mdd, b.metrics.mdd, 1e-9));
        }
    }
}

#[test]
fn value_series_scales_with_capital_for_divisible_prices() {
    let closes = [10.0, 12.5, 8.0, 16.0, 20.0, 5.0];
    let signals = [Decision::Buy, Decision::Hold, Decision::Sell, Decision::Buy, Decision::Sell];
    let s = bars_from_closes(&closes);
    let base = BacktestConfig { lambda: 0.0, kappa: 1.0, ..BacktestConfig::default() };
    let a = run_backtest(&signals, &s, &base).unwrap();
    let b = run_backtest(&signals, &s, &BacktestConfig { initial_cash: 1_000_000.0, ..base }).unwrap();
    assert!(close_rel(a.metrics.arr, b.metrics.arr, 1e-12));
    assert!(close_rel(a.metrics.sr, b.metrics.sr, 1e-12));
    assert!(close_rel(a.metrics.mdd, b.metrics.mdd, 1e-12));
}
