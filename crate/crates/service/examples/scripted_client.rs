//! Talks to the HTTP API in-process the way a front end would: create a
//! session, scroll until the assistant speaks up, accept a direction, pull
//! the blended refresh and close the session.
//!
//! cargo run -p feedscout-service --example scripted_client
//!
//! The same requests work against `feedscout serve` with any HTTP client.

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use feedscout_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Value) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(if body.is_null() { Body::empty() } else { Body::from(body.to_string()) })
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{method:<6} {uri:<40} {status}");
    value
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    std::env::set_var("PROVIDER_MODE", "template");
    let app = router(AppState::new(ServiceConfig::default())?);

    let created = call(
        &app,
        "POST",
        "/sessions",
        json!({"session_id": "demo", "condition": "AI_INIT", "feed": "B", "seed": 4}),
    )
    .await;
    println!("  capabilities: {}", created["handle"]["capabilities"]);
    let items: Vec<String> = created["page"]["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["item_id"].as_str().unwrap().to_string())
        .collect();

    let mark = |phase: &str, boundary: &str, t: u64| json!({"t_ms": t, "phase": phase, "boundary": boundary});
    call(&app, "POST", "/sessions/demo/phase", mark("warmup", "start", 0)).await;

    let mut t = 0;
    for (n, id) in items.iter().enumerate() {
        if n == 10 {
            call(&app, "POST", "/sessions/demo/phase", mark("warmup", "end", t)).await;
            call(&app, "POST", "/sessions/demo/phase", mark("exploration", "start", t)).await;
        }
        t += 500;
        let entered = call(&app, "POST", "/sessions/demo/impressions", json!({"t_ms": t, "item_id": id, "action": "enter"})).await;
        t += 1500;
        call(&app, "POST", "/sessions/demo/impressions", json!({"t_ms": t, "item_id": id, "action": "exit"})).await;
        if let Some(n) = entered["notifications"].as_array().and_then(|n| n.first()) {
            for turn in n["turns"].as_array().unwrap() {
                println!("  assistant: {}", turn["text"].as_str().unwrap());
            }
            break;
        }
    }

    loop {
        let dialogue = call(&app, "GET", "/sessions/demo/dialogue", Value::Null).await;
        let Some(option) = dialogue["presented_options"].as_array().and_then(|o| o.first()).cloned() else {
            break;
        };
        println!("  picking: {}", option["label"].as_str().unwrap());
        t += 2000;
        let reply = call(&app, "POST", "/sessions/demo/dialogue/option", json!({"t_ms": t, "option_id": option["option_id"]})).await;
        for turn in reply["turns"].as_array().unwrap() {
            println!("  assistant: {}", turn["text"].as_str().unwrap());
        }
    }

    t += 1000;
    let refreshed = call(&app, "POST", "/sessions/demo/refresh", json!({"t_ms": t})).await;
    let blended = refreshed["page"]["items"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|i| i["origin"] == "blended")
        .count();
    println!("  {blended} blended items after refresh");

    call(&app, "POST", "/sessions/demo/phase", mark("exploration", "end", t + 1000)).await;
    let closed = call(&app, "DELETE", "/sessions/demo", Value::Null).await;
    println!("{}", serde_json::to_string_pretty(&closed["metrics"])?);
    Ok(())
}
