//! HTTP JSON service over the model. Every handler is a pure function of
//! the loaded model and the request.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};

use fcm_cad::eval::{read_dataset, DatasetError, LabeledDataset, RowError, DEFAULT_GRID_POINTS};
use fcm_cad::model::FieldIssue;
use fcm_cad::{CadModel, ValidationError};

use crate::api::{self, ApiError};

#[derive(Clone)]
pub struct AppState {
    pub model: Arc<CadModel>,
    /// Dataset behind `GET /sweep`.
    pub dataset: Arc<LabeledDataset>,
}

#[derive(Debug)]
pub enum ServiceError {
    BadRequest(String),
    Validation(Vec<FieldIssue>),
    Rows(Vec<RowError>),
    Internal(String),
}

impl From<ApiError> for ServiceError {
    fn from(e: ApiError) -> Self {
        match e {
            ApiError::Validation(v) => ServiceError::Validation(v.issues),
            ApiError::Internal(msg) => ServiceError::Internal(msg),
        }
    }
}

impl From<ValidationError> for ServiceError {
    fn from(e: ValidationError) -> Self {
        ServiceError::Validation(e.issues)
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        match self {
            ServiceError::BadRequest(message) => {
                (StatusCode::BAD_REQUEST, Json(json!({ "error": "bad_request", "message": message }))).into_response()
            }
            ServiceError::Validation(issues) => {
                (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "error": "validation", "issues": issues })))
                    .into_response()
            }
            ServiceError::Rows(rows) => {
                (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "error": "validation", "rows": rows }))).into_response()
            }
            ServiceError::Internal(detail) => {
                let id = uuid::Uuid::new_v4();
                tracing::error!(%id, %detail, "request failed");
                (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({ "error": "internal", "id": id.to_string() })))
                    .into_response()
            }
        }
    }
}

/// CORS for a comma-separated origin list; `*` allows any origin.
pub fn cors_layer(allowed_origins: &str) -> Result<CorsLayer, String> {
    let base = CorsLayer::new().allow_methods([Method::GET, Method::POST]).allow_headers([header::CONTENT_TYPE]);
    let origins: Vec<&str> = allowed_origins.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if origins.contains(&"*") {
        return Ok(base.allow_origin(AllowOrigin::any()));
    }
    let values = origins
        .iter()
        .map(|o| HeaderValue::from_str(o).map_err(|_| format!("invalid origin `{o}`")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(base.allow_origin(AllowOrigin::list(values)))
}

pub fn router(state: AppState, cors: CorsLayer) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/model", get(model))
        .route("/predict", post(predict))
        .route("/whatif", post(whatif))
        .route("/evaluate", post(evaluate))
        .route("/sweep", get(sweep))
        .layer(cors)
        .with_state(state)
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("invalid JSON body: {e}")))
}

/// Rejects parameters the endpoint does not take.
fn check_params(params: &BTreeMap<String, String>, allowed: &[&str]) -> Result<(), ServiceError> {
    let unknown: Vec<FieldIssue> = params
        .keys()
        .filter(|k| !allowed.contains(&k.as_str()))
        .map(|k| FieldIssue { field: k.clone(), message: "unknown query parameter".into() })
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(ServiceError::Validation(unknown))
    }
}

fn number_param<T: std::str::FromStr>(params: &BTreeMap<String, String>, name: &str) -> Result<Option<T>, ServiceError> {
    params
        .get(name)
        .map(|v| {
            v.trim().parse::<T>().map_err(|_| {
                ServiceError::Validation(vec![FieldIssue { field: name.into(), message: format!("`{v}` is not a valid number") }])
            })
        })
        .transpose()
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn model(State(state): State<AppState>) -> Json<fcm_cad::ModelDefinition> {
    Json(state.model.definition().clone())
}

async fn predict(State(state): State<AppState>, body: Bytes) -> Result<Json<api::PredictResponse>, ServiceError> {
    let request: api::PredictRequest = parse_body(&body)?;
    Ok(Json(api::handle_predict(&state.model, &request)?))
}

async fn whatif(State(state): State<AppState>, body: Bytes) -> Result<Json<api::WhatIfResponse>, ServiceError> {
    let request: api::WhatIfRequest = parse_body(&body)?;
    Ok(Json(api::handle_whatif(&state.model, &request)?))
}

/// CSV dataset in the body; optional `?threshold=`.
async fn evaluate(
    State(state): State<AppState>,
    Query(params): Query<BTreeMap<String, String>>,
    body: Bytes,
) -> Result<Json<api::EvaluateResponse>, ServiceError> {
    check_params(&params, &["threshold"])?;
    let threshold = number_param::<f64>(&params, "threshold")?;
    let dataset = read_dataset(body.as_ref(), state.model.concepts(), "request body").map_err(|e| match e {
        DatasetError::Rows(rows) => ServiceError::Rows(rows),
        DatasetError::Empty => {
            ServiceError::Validation(vec![FieldIssue { field: "body".into(), message: "dataset has no records".into() }])
        }
        other => ServiceError::BadRequest(other.to_string()),
    })?;
    Ok(Json(api::handle_evaluate(&state.model, &dataset, threshold)?))
}

/// Sweep over the configured dataset. `?grid=` takes comma-separated
/// thresholds, `?points=` an evenly spaced grid size.
async fn sweep(
    State(state): State<AppState>,
    Query(params): Query<BTreeMap<String, String>>,
) -> Result<Json<api::SweepResponse>, ServiceError> {
    check_params(&params, &["grid", "points"])?;
    let grid = match (params.get("grid"), number_param::<usize>(&params, "points")?) {
        (Some(_), Some(_)) => {
            return Err(ServiceError::Validation(vec![FieldIssue {
                field: "grid".into(),
                message: "give either grid or points, not both".into(),
            }]))
        }
        (Some(text), None) => api::parse_grid(text)?,
        (None, Some(n)) => api::grid_of(n)?,
        (None, None) => api::grid_of(DEFAULT_GRID_POINTS)?,
    };
    Ok(Json(api::handle_sweep(&state.model, &state.dataset, &grid)?))
}
