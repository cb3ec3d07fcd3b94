//! Drives a coding session through the HTTP API in-process: create, fetch
//! the next verbatim, validate it, watch the metrics, export.
//!
//! ```text
//! cargo run --release -p verbacode-server --example scripted_session
//! ```

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;
use verbacode::features::FeatureSpace;
use verbacode::synth::{topic_corpus, TopicCorpusParams};
use verbacode_server::{router, AppState, ServerConfig};

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    serde_json::from_slice(&bytes).unwrap()
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let params = TopicCorpusParams {
        n_docs: 1500,
        ..TopicCorpusParams::default()
    };
    let corpus = topic_corpus(&params, 0)?;
    let path = dir.path().join("news.jsonl");
    corpus.write_jsonl(&path)?;

    let config = ServerConfig {
        corpora: vec![path],
        model: None,
        data_dir: Some(dir.path().join("state")),
        static_dir: None,
        demo: true,
        space: FeatureSpace::new(1 << 18, 0)?,
    };
    let app = router(AppState::load(&config)?, None);

    let session = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({ "corpus": "news", "codes": ["grain"], "policy": "uncertain", "budget": 60 })),
    )
    .await;
    let id = session["id"].as_str().unwrap().to_owned();
    println!("session {id}");

    // the scripted coder answers from the corpus labels
    let mut next = call(&app, Method::GET, &format!("/sessions/{id}/next"), None).await;
    while let Some(item) = next["item_id"].as_str().map(str::to_owned) {
        let v = &corpus.verbatims[corpus.position(&item).unwrap()];
        let label = if v.codes.contains("grain") { "positive" } else { "negative" };
        let r = call(
            &app,
            Method::POST,
            &format!("/sessions/{id}/validate"),
            Some(json!({ "item_id": item, "label": label })),
        )
        .await;
        if r["validated"].as_u64().unwrap() % 10 == 0 {
            println!(
                "{:>3} validated  pooled F1 {:.3}  latency {:.2} ms",
                r["validated"],
                r["pooled_f1"].as_f64().unwrap(),
                r["latency_ms"].as_f64().unwrap()
            );
        }
        next = r["next"].clone();
    }

    let export = call(&app, Method::GET, &format!("/sessions/{id}/export"), None).await;
    let items = export["items"].as_array().unwrap();
    let human = items.iter().filter(|i| i["source"]["grain"] == "human").count();
    let coded = items
        .iter()
        .filter(|i| i["codes"].as_array().unwrap().contains(&json!("grain")))
        .count();
    println!("{} items, {human} coded by hand, {coded} carry `grain`", items.len());
    Ok(())
}
