use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use fcm_cad::eval::{generate_synthetic, write_dataset};
use fcm_cad::CadModel;
use fcm_cad_cli::service::{cors_layer, router, AppState};

fn app() -> Router {
    let state = AppState {
        model: Arc::new(CadModel::bundled()),
        dataset: Arc::new(generate_synthetic(303, 187.0 / 303.0, 42).unwrap()),
    };
    router(state, cors_layer("http://localhost:5173").unwrap())
}

async fn send(app: Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, body)
}

fn post_json(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri).header(header::CONTENT_TYPE, "application/json").body(Body::from(body.to_string())).unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

#[tokio::test]
async fn health_and_model() {
    let (status, body) = send(app(), get("/health")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");

    let (status, body) = send(app(), get("/model")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["concepts"].as_array().unwrap().len(), 31);
    assert_eq!(body["weights"]["values"][28]["weight"], -0.85);
    assert_eq!(body["rules"].as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn predict_empty_patient() {
    let (status, body) = send(app(), post_json("/predict", json!({ "patient": {} }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["normalized_score"], 0.0);
    assert_eq!(body["band"], "small");
    assert_eq!(body["band_label"], "Small Probability");
    assert_eq!(body["classification"], "healthy");
    assert_eq!(body["threshold"], 0.25);
    assert_eq!(body["contributions"].as_array().unwrap().len(), 30);
}

#[tokio::test]
async fn predict_male_abnormal_scintigraphy() {
    let req = json!({ "patient": { "gender_male": "yes", "scintigraphy_abnormal": "abnormal" } });
    let (status, body) = send(app(), post_json("/predict", req)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["raw_score"], 1.0);
    assert_eq!(body["normalized_score"].as_f64().unwrap(), 1.0_f64.tanh());
    assert_eq!(body["band"], "very_large");
    assert_eq!(body["classification"], "diseased");
    assert_eq!(body["effective_weights"]["provenance"], "baseline_table4");
}

#[tokio::test]
async fn predict_typical_angina_is_422() {
    let req = json!({ "patient": { "typical_angina": "yes", "smoking": "often" } });
    let (status, body) = send(app(), post_json("/predict", req)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "validation");
    let fields: Vec<&str> = body["issues"].as_array().unwrap().iter().map(|i| i["field"].as_str().unwrap()).collect();
    assert_eq!(fields, vec!["smoking", "typical_angina"]);
}

#[tokio::test]
async fn malformed_bodies_are_400() {
    let req = Request::post("/predict").body(Body::from("{not json")).unwrap();
    let (status, body) = send(app(), req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "bad_request");

    let (status, body) = send(app(), post_json("/predict", json!({ "patient": {}, "extra": 1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["message"].as_str().unwrap().contains("extra"));
}

#[tokio::test]
async fn whatif_delta_and_parity_with_predict() {
    let req = json!({ "patient": {}, "overrides": { "A30": "abnormal" } });
    let (status, body) = send(app(), post_json("/whatif", req)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["delta"].as_f64().unwrap(), 0.7_f64.tanh());

    let (_, direct) = send(app(), post_json("/predict", json!({ "patient": { "A30": "abnormal" } }))).await;
    assert_eq!(body["variant"], direct);
    let (_, base) = send(app(), post_json("/predict", json!({ "patient": {} }))).await;
    assert_eq!(body["base"], base);

    let (_, same) = send(app(), post_json("/whatif", json!({ "patient": { "smoking": "yes" } }))).await;
    assert_eq!(same["delta"], 0.0);
}

#[tokio::test]
async fn whatif_exclusivity_violation_is_422() {
    let req = json!({ "patient": { "age_40_50": "yes" }, "overrides": { "age_over_60": "yes" } });
    let (status, body) = send(app(), post_json("/whatif", req)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["issues"][0]["field"].as_str().unwrap().starts_with("overrides."));
}

#[tokio::test]
async fn evaluate_inline_csv() {
    let model = CadModel::bundled();
    let d = generate_synthetic(40, 0.5, 3).unwrap();
    let mut csv = Vec::new();
    write_dataset(&mut csv, &d, model.concepts()).unwrap();
    let req = Request::post("/evaluate?threshold=0.1").header(header::CONTENT_TYPE, "text/csv").body(Body::from(csv)).unwrap();
    let (status, body) = send(app(), req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["records"], 40);
    assert_eq!(body["threshold"], 0.1);
    let c = &body["confusion"];
    let total: u64 = ["tp", "fp", "fn", "tn"].iter().map(|k| c[k].as_u64().unwrap()).sum();
    assert_eq!(total, 40);
    assert_eq!(body["dataset"]["kind"], "ingested");
}

#[tokio::test]
async fn evaluate_errors() {
    let bad = "case_id,label,gender_male,gender_female\nA,healthy,yes,yes\n";
    let (status, body) = send(app(), Request::post("/evaluate").body(Body::from(bad)).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["rows"][0]["line"], 2);

    let (status, _) = send(app(), Request::post("/evaluate").body(Body::from("case_id,label\n")).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let ok = "case_id,label\nA,healthy\n";
    let (status, body) = send(app(), Request::post("/evaluate?threshold=abc").body(Body::from(ok)).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["issues"][0]["field"], "threshold");
    let (status, body) = send(app(), Request::post("/evaluate?threshold=2").body(Body::from(ok)).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["issues"][0]["field"], "threshold");
}

#[tokio::test]
async fn sweep_default_and_custom_grids() {
    let (status, body) = send(app(), get("/sweep")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["points"].as_array().unwrap().len(), 41);
    assert_eq!(body["records"], 303);
    assert_eq!(body["dataset"]["kind"], "synthetic");
    assert_eq!(body["recommended"]["rule"], "max_youden_tie_higher_sensitivity");

    let (status, body) = send(app(), get("/sweep?grid=-1,0,0.5")).await;
    assert_eq!(status, StatusCode::OK);
    let points = body["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    assert_eq!(points[0]["metrics"]["sensitivity"], 1.0);

    let (status, _) = send(app(), get("/sweep?points=5")).await;
    assert_eq!(status, StatusCode::OK);

    for bad in ["/sweep?grid=0.5,0", "/sweep?grid=x", "/sweep?grid=0&points=3", "/sweep?points=1", "/sweep?step=2"] {
        let (status, body) = send(app(), get(bad)).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{bad}");
        assert_eq!(body["error"], "validation", "{bad}");
    }
}

#[tokio::test]
async fn undefined_metrics_serialize_as_strings() {
    // a single healthy record leaves sensitivity undefined
    let csv = "case_id,label\nA,healthy\n";
    let (status, body) = send(app(), Request::post("/evaluate").body(Body::from(csv)).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["metrics"]["sensitivity"], "undefined");
    assert_eq!(body["youden"], "undefined");
    assert_eq!(body["metrics"]["specificity"], 1.0);
}

#[tokio::test]
async fn cors_allows_configured_origin_only() {
    let preflight = |origin: &str| {
        Request::builder()
            .method(Method::OPTIONS)
            .uri("/predict")
            .header(header::ORIGIN, origin)
            .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
            .body(Body::empty())
            .unwrap()
    };
    let resp = app().oneshot(preflight("http://localhost:5173")).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://localhost:5173");
    let resp = app().oneshot(preflight("http://evil.example")).await.unwrap();
    assert!(resp.headers().get(header::ACCESS_CONTROL_ALLOW_ORIGIN).is_none());

    let any = router(
        AppState { model: Arc::new(CadModel::bundled()), dataset: Arc::new(generate_synthetic(5, 0.5, 1).unwrap()) },
        cors_layer("*").unwrap(),
    );
    let resp = any.oneshot(preflight("http://elsewhere.example")).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
    assert!(cors_layer("bad\norigin").is_err());
}

#[tokio::test]
async fn identical_requests_get_identical_responses() {
    let app = app();
    let req = || post_json("/predict", json!({ "patient": { "gender_female": "yes", "age": 45, "ecg_normal": "yes" } }));
    let a = app.clone().oneshot(req()).await.unwrap().into_body().collect().await.unwrap().to_bytes();
    let b = app.oneshot(req()).await.unwrap().into_body().collect().await.unwrap().to_bytes();
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["fired_rules"], json!(["woman"]));
}
