//! Agent-driven backtests against a small in-process agent.

use std::path::Path;

use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_quantgym");

/// Queries market data, then buys on odd days of the month, sells on days
/// divisible by 10 and leaves other episodes undecided.
async fn agent(Json(req): Json<Value>) -> Json<Value> {
    let client = reqwest::Client::new();
    let base = format!("{}/episodes/{}", req["service_url"].as_str().unwrap(), req["episode_id"].as_str().unwrap());
    let date = req["date"].as_str().unwrap().to_string();
    client
        .post(format!("{base}/tool"))
        .json(&json!({
            "name": "get_market_data",
            "arguments": {"symbol": req["symbol"], "curr_date": date, "look_back_days": 7},
            "reasoning": "look at recent prices"
        }))
        .send()
        .await
        .unwrap();
    let day: u32 = date[8..].parse().unwrap();
    let action = if day % 10 == 0 {
        Some("SELL")
    } else if day % 2 == 1 {
        Some("BUY")
    } else {
        None
    };
    if let Some(action) = action {
        client.post(format!("{base}/decision")).json(&json!({"action": action})).send().await.unwrap();
    }
    Json(json!({"ok": true}))
}

fn expected_decisions(dir: &Path) -> std::path::PathBuf {
    let series = quantgym::marketdata::ingest_bars(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus/bars/MSFT.csv"),
        "MSFT",
    )
    .unwrap();
    let mut text = String::from("date,action\n");
    for b in series.between("2025-05-01".parse().unwrap(), "2025-06-30".parse().unwrap()).bars() {
        let day = chrono::Datelike::day(&b.date);
        let a = if day % 10 == 0 { "SELL" } else if day % 2 == 1 { "BUY" } else { "HOLD" };
        text.push_str(&format!("{},{a}\n", b.date));
    }
    let path = dir.join("expected.csv");
    std::fs::write(&path, text).unwrap();
    path
}

#[tokio::test(flavor = "multi_thread")]
async fn agent_backtest_matches_equivalent_decisions() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}/decide", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, Router::new().route("/decide", post(agent))).await });

    let dir = TempDir::new().unwrap();
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus");
    let common = |src: &[&str]| {
        let mut v: Vec<String> = ["--corpus", corpus.to_str().unwrap(), "--out", dir.path().to_str().unwrap(),
            "backtest", "--symbol", "MSFT", "--start", "2025-05-01", "--end", "2025-06-30", "--no-timestamp"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        v.extend(src.iter().map(|s| s.to_string()));
        v
    };
    let out = tokio::process::Command::new(BIN).args(common(&["--agent", &url])).output().await.unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("using HOLD"));

    let expected = expected_decisions(dir.path());
    let out = tokio::process::Command::new(BIN)
        .args(common(&["--decisions", expected.to_str().unwrap()]))
        .output()
        .await
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let read = |name: &str| -> Value {
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap()
    };
    let (a, b) = (read("backtest_MSFT_agent.json"), read("backtest_MSFT_decisions.json"));
    assert_eq!(a["values"], b["values"]);
    assert_eq!(a["trades"], b["trades"]);
    assert!(!a["trades"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn unreachable_agent_is_an_input_error() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus");
    let dir = TempDir::new().unwrap();
    let out = tokio::process::Command::new(BIN)
        .args(["--corpus", corpus.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "backtest",
            "--symbol", "MSFT", "--start", "2025-05-01", "--end", "2025-05-09", "--agent", "http://127.0.0.1:9/decide"])
        .output()
        .await
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unreachable"));
}
