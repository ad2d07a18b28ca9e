use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use bar_core::parse_scenario;
use bar_service::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn scenario_json(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"));
    let text = std::fs::read_to_string(&path).unwrap();
    serde_json::to_value(parse_scenario(&text).unwrap()).unwrap()
}

async fn call(method: Method, uri: &str, body: Option<&Value>) -> (StatusCode, Vec<u8>) {
    let request = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let body = match body {
        Some(v) => Body::from(serde_json::to_vec(v).unwrap()),
        None => Body::empty(),
    };
    let response = router().oneshot(request.body(body).unwrap()).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn post(uri: &str, body: &Value) -> (StatusCode, Value) {
    let (status, bytes) = call(Method::POST, uri, Some(body)).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn analyze_paper_defaults() {
    let (status, body) = post("/analyze", &scenario_json("paper-defaults")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["n_star"], 199);
    assert_eq!(body["label"], "ALL");
    assert_eq!(body["breakdown"]["effective"], 5.08);
    assert_eq!(body["breakdown"]["bandwidth_total"], 0.202);
}

#[tokio::test]
async fn analyze_samples_requested_lengths() {
    let mut req = scenario_json("paper-defaults");
    req["curve_n"] = json!([10, 198, 199]);
    let (_, body) = post("/analyze", &req).await;
    let curve = body["curve"].as_array().unwrap();
    let ns: Vec<u64> = curve.iter().map(|p| p["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, [10, 198, 199]);
    assert_eq!(curve[1]["within_budget"], true);
    assert_eq!(curve[2]["within_budget"], false);
}

#[tokio::test]
async fn negative_tau_names_the_field() {
    let mut req = scenario_json("paper-defaults");
    req["hardware"]["tau_decode"] = json!(-0.05);
    let (status, body) = post("/analyze", &req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["kind"], "validation");
    assert_eq!(body["error"]["field"], "hardware.tau_decode");
}

#[tokio::test]
async fn malformed_bodies_are_rejected() {
    let (status, bytes) = call(Method::POST, "/analyze", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(body["error"]["kind"], "parse");

    let mut req = scenario_json("paper-defaults");
    req["task"]["length"] = json!(5);
    let (status, body) = post("/analyze", &req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["field"], "task.length");
}

#[tokio::test]
async fn repeated_requests_are_byte_identical() {
    let req = scenario_json("stochastic-lognormal");
    for uri in ["/analyze", "/sweep", "/simulate"] {
        let (s1, first) = call(Method::POST, uri, Some(&req)).await;
        let (s2, second) = call(Method::POST, uri, Some(&req)).await;
        assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK), "{uri}");
        assert_eq!(first, second, "{uri}");
    }
}

#[tokio::test]
async fn single_cell_sweep_is_on_the_frontier() {
    let mut req = scenario_json("paper-defaults");
    req["sweep"] = json!({
        "cot_range": { "start": 100, "end": 100 },
        "retrieval_range": { "start": 2, "end": 2 },
    });
    let (status, body) = post("/sweep", &req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["cells"], 1);
    assert_eq!(body["points"][0]["on_frontier"], true);
}

#[tokio::test]
async fn paper_defaults_sweep_has_twenty_points() {
    let (status, body) = post("/sweep", &scenario_json("paper-defaults")).await;
    assert_eq!(status, StatusCode::OK);
    let points = body["points"].as_array().unwrap();
    assert_eq!(points.len(), 20);
    assert!(points.iter().all(|p| p["on_frontier"].is_boolean()));
}

#[tokio::test]
async fn malformed_range_is_rejected() {
    let mut req = scenario_json("paper-defaults");
    req["sweep"]["retrieval_range"] = json!({ "start": 5, "end": 1 });
    let (status, body) = post("/sweep", &req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["field"], "sweep.retrieval_range.start");

    req["sweep"]["retrieval_range"] = json!({ "start": 0, "end": 3, "stride": 0 });
    let (status, body) = post("/sweep", &req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["field"], "sweep.retrieval_range.stride");
}

#[tokio::test]
async fn oversized_sweep_is_refused() {
    let mut req = scenario_json("paper-defaults");
    req["sweep"] = json!({
        "cot_range": { "start": 0, "end": 1000 },
        "retrieval_range": { "start": 0, "end": 99 },
    });
    let (status, body) = post("/sweep", &req).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(body["error"]["kind"], "too-large");

    req["sweep"]["retrieval_range"]["end"] = json!(98);
    let (status, _) = post("/sweep", &req).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn sweep_without_curve_is_refused() {
    let mut req = scenario_json("paper-defaults");
    req.as_object_mut().unwrap().remove("curve");
    let (status, body) = post("/sweep", &req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["field"], "curve");
}

#[tokio::test]
async fn simulate_requires_a_seed() {
    let mut req = scenario_json("paper-defaults");
    req["sim"].as_object_mut().unwrap().remove("seed");
    let (status, body) = post("/simulate", &req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["field"], "sim");
    assert!(body["error"]["message"].as_str().unwrap().contains("seed"));

    req.as_object_mut().unwrap().remove("sim");
    let (status, body) = post("/simulate", &req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["field"], "sim");
}

#[tokio::test]
async fn simulate_paper_defaults() {
    let (status, body) = post("/simulate", &scenario_json("paper-defaults")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["trace"]["header"]["seed"], 42);
    assert_eq!(body["trace"]["header"]["rng"], "chacha8-seed_from_u64");
    let total = body["trace"]["total_latency"].as_f64().unwrap();
    assert!((total - 5.09).abs() < 1e-12, "{total}");
    assert_eq!(body["validation"]["total_dominates_analytic"], true);
}

#[tokio::test]
async fn oversized_simulation_is_refused() {
    let mut req = scenario_json("paper-defaults");
    req["design"]["cot_tokens"] = json!(2_000_000);
    let (status, body) = post("/simulate", &req).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(body["error"]["field"], "design");
}

#[tokio::test]
async fn health_reports_versions() {
    let (status, bytes) = call(Method::GET, "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(body["status"], "ok");
    assert_eq!(body["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(body["scenario_schema_version"], 1);
    assert_eq!(body["report_schema_version"], 1);
}

#[tokio::test]
async fn unknown_route_is_404() {
    let (status, _) = call(Method::GET, "/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
