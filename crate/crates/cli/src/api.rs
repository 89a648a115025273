use serde::{Deserialize, Serialize};

use fcm_cad::eval::{self, ConfusionMatrix, DatasetProvenance, EvalError, LabeledDataset, Metric};
use fcm_cad::model::{Classification, FieldIssue, ProbabilityBand, WeightSetDef};
use fcm_cad::{CadModel, Contribution, DiagnoseError, Diagnosis, MetricsReport, PatientInput, ValidationError};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub patient: PatientInput,
    #[serde(default)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub patient: PatientInput,
    #[serde(default)]
    pub overrides: PatientInput,
    #[serde(default)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictResponse {
    pub raw_score: f64,
    pub normalized_score: f64,
    pub band: ProbabilityBand,
    pub band_label: &'static str,
    pub classification: Classification,
    pub threshold: f64,
    pub contributions: Vec<Contribution>,
    pub effective_weights: WeightSetDef,
    pub fired_rules: Vec<String>,
}

impl From<Diagnosis> for PredictResponse {
    fn from(d: Diagnosis) -> Self {
        Self {
            raw_score: d.raw_score,
            normalized_score: d.normalized_score,
            band: d.band,
            band_label: d.band.label(),
            classification: d.classification,
            threshold: d.threshold,
            contributions: d.contributions,
            effective_weights: d.effective_weights.to_def(),
            fired_rules: d.fired_rules,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhatIfResponse {
    pub base: PredictResponse,
    pub variant: PredictResponse,
    /// `variant.normalized_score - base.normalized_score`
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateResponse {
    pub dataset: DatasetProvenance,
    pub records: usize,
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub youden: Metric<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResponse {
    pub dataset: DatasetProvenance,
    pub records: usize,
    #[serde(flatten)]
    pub sweep: fcm_cad::ThresholdSweep,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("internal error: {0}")]
    Internal(String),
}

fn threshold(model: &CadModel, requested: Option<f64>) -> Result<f64, ValidationError> {
    match requested {
        None => Ok(model.default_threshold()),
        Some(t) if (-1.0..=1.0).contains(&t) => Ok(t),
        Some(t) => Err(ValidationError::single("threshold", format!("{t} is outside [-1, 1]"))),
    }
}

fn from_diagnose(e: DiagnoseError) -> ApiError {
    match e {
        DiagnoseError::Validation(v) => ApiError::Validation(v),
        DiagnoseError::Threshold(t) => {
            ApiError::Validation(ValidationError::single("threshold", format!("{t} is outside [-1, 1]")))
        }
        DiagnoseError::Engine(e) => ApiError::Internal(e.to_string()),
    }
}

pub fn handle_predict(model: &CadModel, request: &PredictRequest) -> Result<PredictResponse, ApiError> {
    let threshold = threshold(model, request.threshold)?;
    let record = model.parse_patient(&request.patient)?;
    Ok(model.diagnose(&record, threshold).map_err(from_diagnose)?.into())
}

/// Scores the patient and the patient with overrides applied. Issues found
/// in the overrides are reported under `overrides.<attribute>`.
pub fn handle_whatif(model: &CadModel, request: &WhatIfRequest) -> Result<WhatIfResponse, ApiError> {
    let threshold = threshold(model, request.threshold)?;
    let record = model.parse_patient(&request.patient)?;
    let altered = model.apply_overrides(&record, &request.overrides).map_err(|e| ValidationError {
        issues: e
            .issues
            .into_iter()
            .map(|i| FieldIssue { field: format!("overrides.{}", i.field), message: i.message })
            .collect(),
    })?;
    let base: PredictResponse = model.diagnose(&record, threshold).map_err(from_diagnose)?.into();
    let variant: PredictResponse = model.diagnose(&altered, threshold).map_err(from_diagnose)?.into();
    let delta = variant.normalized_score - base.normalized_score;
    Ok(WhatIfResponse { base, variant, delta })
}

fn from_eval(e: EvalError) -> ApiError {
    match e {
        EvalError::EmptyDataset => ApiError::Validation(ValidationError::single("dataset", "dataset is empty")),
        EvalError::Grid(msg) => ApiError::Validation(ValidationError::single("grid", msg)),
        EvalError::Record { id, source } => match from_diagnose(source) {
            ApiError::Validation(v) => ApiError::Validation(ValidationError {
                issues: v.issues.into_iter().map(|i| FieldIssue { field: format!("{id}.{}", i.field), ..i }).collect(),
            }),
            ApiError::Internal(msg) => ApiError::Internal(format!("record {id}: {msg}")),
        },
    }
}

pub fn handle_evaluate(model: &CadModel, dataset: &LabeledDataset, threshold_: Option<f64>) -> Result<EvaluateResponse, ApiError> {
    let threshold = threshold(model, threshold_)?;
    let e = eval::evaluate(dataset, model, threshold).map_err(from_eval)?;
    Ok(EvaluateResponse {
        dataset: dataset.provenance().clone(),
        records: dataset.len(),
        threshold: e.threshold,
        confusion: e.confusion,
        metrics: e.metrics,
        youden: e.metrics.youden(),
    })
}

pub fn handle_sweep(model: &CadModel, dataset: &LabeledDataset, grid: &[f64]) -> Result<SweepResponse, ApiError> {
    let sweep = eval::sweep(dataset, model, grid).map_err(from_eval)?;
    Ok(SweepResponse { dataset: dataset.provenance().clone(), records: dataset.len(), sweep })
}

/// Comma-separated thresholds, e.g. `-1,-0.5,0,0.5,1`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, ValidationError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ValidationError::single("grid", format!("`{}` is not a number", s.trim())))
        })
        .collect()
}

/// `points` evenly spaced thresholds over [-1, 1].
pub fn grid_of(points: usize) -> Result<Vec<f64>, ValidationError> {
    if points < 2 {
        return Err(ValidationError::single("points", "need at least 2 grid points"));
    }
    Ok(eval::default_grid(points))
}
