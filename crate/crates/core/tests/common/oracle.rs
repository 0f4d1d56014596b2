//! Naive reference implementations.

use quantgym::marketdata::Bar;

fn avg(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

/// Simple moving average ending at each index `i >= n - 1`.
pub fn sma(closes: &[f64], n: usize) -> Vec<f64> {
    (n - 1..closes.len()).map(|i| avg(&closes[i + 1 - n..=i])).collect()
}

/// EMA defined recursively from an SMA seed, evaluated per index by
/// unrolling the recursion from scratch each time.
pub fn ema(closes: &[f64], n: usize) -> Vec<f64> {
    let k = 2.0 / (n as f64 + 1.0);
    (n - 1..closes.len())
        .map(|i| {
            let mut e = avg(&closes[..n]);
            for c in &closes[n..=i] {
                e = k * c + (1.0 - k) * e;
            }
            e
        })
        .collect()
}

pub fn vwma(bars: &[Bar], n: usize) -> Vec<f64> {
    (n - 1..bars.len())
        .map(|i| {
            let w = &bars[i + 1 - n..=i];
            let num: f64 = w.iter().map(|b| b.close * b.volume as f64).sum();
            let den: f64 = w.iter().map(|b| b.volume as f64).sum();
            num / den
        })
        .collect()
}

fn wilder_at(xs: &[f64], n: usize, upto: usize) -> f64 {
    // xs indexed from 0; first average over xs[0..n], smoothed through xs[upto]
    let mut a = avg(&xs[..n]);
    for x in &xs[n..=upto] {
        a = (a * (n as f64 - 1.0) + x) / n as f64;
    }
    a
}

pub fn rsi(closes: &[f64], n: usize) -> Vec<f64> {
    let mut gains = Vec::new();
    let mut losses = Vec::new();
    for i in 1..closes.len() {
        let ch = closes[i] - closes[i - 1];
        gains.push(if ch > 0.0 { ch } else { 0.0 });
        losses.push(if ch < 0.0 { -ch } else { 0.0 });
    }
    (n - 1..gains.len())
        .map(|j| {
            let g = wilder_at(&gains, n, j);
            let l = wilder_at(&losses, n, j);
            if l == 0.0 {
                100.0
            } else if g == 0.0 {
                0.0
            } else {
                let rs = g / l;
                100.0 - 100.0 / (1.0 + rs)
            }
        })
        .collect()
}

/// (%K, %D) pairs from the first index where %D is defined.
pub fn stoch(bars: &[Bar], n: usize, ks: usize, ds: usize) -> Vec<(f64, f64)> {
    let raw_at = |i: usize| -> f64 {
        let w = &bars[i + 1 - n..=i];
        let mut hh = f64::MIN;
        let mut ll = f64::MAX;
        for b in w {
            if b.high > hh {
                hh = b.high;
            }
            if b.low < ll {
                ll = b.low;
            }
        }
        if hh == ll {
            50.0
        } else {
            100.0 * (bars[i].close - ll) / (hh - ll)
        }
    };
    let k_at = |i: usize| -> f64 { (0..ks).map(|j| raw_at(i - j)).sum::<f64>() / ks as f64 };
    let first = n + ks + ds - 3;
    (first..bars.len())
        .map(|i| {
            let d = (0..ds).map(|j| k_at(i - j)).sum::<f64>() / ds as f64;
            (k_at(i), d)
        })
        .collect()
}

pub fn cci(bars: &[Bar], n: usize) -> Vec<f64> {
    let tp: Vec<f64> = bars.iter().map(|b| (b.high + b.low + b.close) / 3.0).collect();
    (n - 1..bars.len())
        .map(|i| {
            let w = &tp[i + 1 - n..=i];
            let m = avg(w);
            let md = w.iter().map(|x| (x - m).abs()).sum::<f64>() / n as f64;
            if md == 0.0 {
                0.0
            } else {
                (tp[i] - m) / (0.015 * md)
            }
        })
        .collect()
}

/// (middle, upper, lower).
pub fn bbands(closes: &[f64], n: usize, m: f64) -> Vec<(f64, f64, f64)> {
    (n - 1..closes.len())
        .map(|i| {
            let w = &closes[i + 1 - n..=i];
            let mid = avg(w);
            let var = w.iter().map(|x| (x - mid) * (x - mid)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            (mid, mid + m * sd, mid - m * sd)
        })
        .collect()
}

pub fn atr(bars: &[Bar], n: usize) -> Vec<f64> {
    let mut tr = Vec::new();
    for i in 1..bars.len() {
        let pc = bars[i - 1].close;
        let b = &bars[i];
        let mut t = b.high - b.low;
        if (b.high - pc).abs() > t {
            t = (b.high - pc).abs();
        }
        if (b.low - pc).abs() > t {
            t = (b.low - pc).abs();
        }
        tr.push(t);
    }
    (n - 1..tr.len()).map(|j| wilder_at(&tr, n, j)).collect()
}

pub fn obv(bars: &[Bar]) -> Vec<f64> {
    (0..bars.len())
        .map(|i| {
            let mut total = 0.0;
            for j in 1..=i {
                if bars[j].close > bars[j - 1].close {
                    total += bars[j].volume as f64;
                } else if bars[j].close < bars[j - 1].close {
                    total -= bars[j].volume as f64;
                }
            }
            total
        })
        .collect()
}

pub fn cmf(bars: &[Bar], n: usize) -> Vec<f64> {
    (n - 1..bars.len())
        .map(|i| {
            let mut num = 0.0;
            let mut den = 0.0;
            for b in &bars[i + 1 - n..=i] {
                let mfm = if b.high == b.low {
                    0.0
                } else {
                    ((b.close - b.low) - (b.high - b.close)) / (b.high - b.low)
                };
                num += mfm * b.volume as f64;
                den += b.volume as f64;
            }
            num / den
        })
        .collect()
}

/// (macd, signal, histogram) from the first index where the signal exists.
pub fn macd(closes: &[f64], fast: usize, slow: usize, signal: usize) -> Vec<(f64, f64, f64)> {
    let ef = ema(closes, fast);
    let es = ema(closes, slow);
    let line: Vec<f64> = (slow - 1..closes.len()).map(|i| ef[i + 1 - fast] - es[i + 1 - slow]).collect();
    let sig = ema(&line, signal);
    (signal - 1..line.len())
        .map(|j| {
            let s = sig[j + 1 - signal];
            (line[j], s, line[j] - s)
        })
        .collect()
}

/// Double loop: recompute each weight's normaliser inside the loop.
pub fn forward_return(prices: &[f64], t: usize, horizon: usize, eta: f64) -> f64 {
    let mut r = 0.0;
    for h in 1..=horizon {
        let mut norm = 0.0;
        for i in 1..=horizon {
            norm += eta.powf(i as f64);
        }
        r += eta.powf(h as f64) / norm * (prices[t + h + 1] / prices[t + 1] - 1.0);
    }
    r
}

pub fn arr(values: &[f64]) -> f64 {
    let t = (values.len() - 1) as f64;
    ((values[values.len() - 1] / values[0]).ln() * 252.0 / t).exp() - 1.0
}

pub fn sharpe(values: &[f64]) -> f64 {
    let t = values.len() - 1;
    let r: Vec<f64> = (1..=t).map(|i| values[i] / values[i - 1] - 1.0).collect();
    let mean = r.iter().sum::<f64>() / t as f64;
    let mut ss = 0.0;
    for x in &r {
        ss += (x - mean) * (x - mean);
    }
    let sd = (ss / (t as f64 - 1.0)).sqrt();
    if sd == 0.0 {
        0.0
    } else {
        mean / sd
    }
}

/// Brute force over every (peak, trough) pair with peak index <= trough index,
/// both in 1..=T.
pub fn mdd(values: &[f64]) -> f64 {
    let t = values.len() - 1;
    let mut worst = 0.0;
    for j in 1..=t {
        let mut peak = values[1];
        for s in 1..=j {
            if values[s] > peak {
                peak = values[s];
            }
        }
        let dd = (peak - values[j]) / peak;
        if dd > worst {
            worst = dd;
        }
    }
    worst
}
