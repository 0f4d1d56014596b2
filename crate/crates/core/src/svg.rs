//! Static equity-curve rendering.

use std::fmt::Write as _;

use crate::backtest::BacktestReport;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 300.0;
const PAD: f64 = 40.0;

/// Polyline of the report's value series with min/max labels.
pub fn equity_curve_svg(report: &BacktestReport) -> String {
    let values = &report.values;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let step = if values.len() > 1 { (WIDTH - 2.0 * PAD) / (values.len() - 1) as f64 } else { 0.0 };

    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = PAD + i as f64 * step;
            let y = HEIGHT - PAD - (v - lo) / span * (HEIGHT - 2.0 * PAD);
            format!("{x:.2},{y:.2}")
        })
        .collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="20" font-family="monospace" font-size="12">{} {} to {} (ARR {:.2}%, SR {:.3}, MDD {:.2}%)</text>"#,
        report.symbol,
        report.start,
        report.end,
        report.metrics.arr * 100.0,
        report.metrics.sr,
        report.metrics.mdd * 100.0
    );
    let _ = writeln!(
        out,
        r#"<text x="2" y="{:.2}" font-family="monospace" font-size="10">{hi:.0}</text>"#,
        PAD + 4.0
    );
    let _ = writeln!(
        out,
        r#"<text x="2" y="{:.2}" font-family="monospace" font-size="10">{lo:.0}</text>"#,
        HEIGHT - PAD
    );
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    );
    out.push_str("</svg>\n");
    out
}
