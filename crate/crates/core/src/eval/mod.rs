//! Batch classification, confusion-matrix metrics and threshold sweeps.

mod dataset;
mod metrics;
mod synthetic;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use dataset::{load_dataset, read_dataset, write_dataset, DatasetError, DatasetProvenance, LabeledDataset, RowError};
pub use metrics::{metrics_table, ConfusionMatrix, Metric, MetricsReport};
pub use synthetic::{generate_synthetic, SyntheticError, SYNTHETIC_NOTE};

use crate::model::{CadModel, DiagnoseError, Label};
use crate::scalar::Scalar;

/// Number of thresholds in the default sweep grid.
pub const DEFAULT_GRID_POINTS: usize = 41;

pub const YOUDEN_RULE: &str = "max_youden_tie_higher_sensitivity";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("record {id}: {source}")]
    Record {
        id: String,
        #[source]
        source: DiagnoseError,
    },
    #[error("invalid threshold grid: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation<T> {
    pub threshold: T,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport<T>,
}

/// Normalized score and ground truth of every record, in dataset order.
pub fn score_dataset<T: Scalar>(dataset: &LabeledDataset, model: &CadModel<T>) -> Result<Vec<(T, Label)>, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    // threshold does not affect the score
    let probe = model.default_threshold();
    dataset
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let d = model.diagnose(r, probe).map_err(|source| EvalError::Record {
                id: r.id.clone().unwrap_or_else(|| format!("#{}", i + 1)),
                source,
            })?;
            Ok((d.normalized_score, r.label.expect("labeled dataset")))
        })
        .collect()
}

/// Tallies scores against labels; a score at or above the threshold is
/// classified diseased.
pub fn confusion_at<T: Scalar>(scores: &[(T, Label)], threshold: T) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for &(s, label) in scores {
        let predicted = if s >= threshold { Label::Diseased } else { Label::Healthy };
        cm.record(predicted, label);
    }
    cm
}

pub fn evaluate<T: Scalar>(dataset: &LabeledDataset, model: &CadModel<T>, threshold: T) -> Result<Evaluation<T>, EvalError> {
    if !(threshold >= -T::one() && threshold <= T::one()) {
        return Err(EvalError::Grid(format!("threshold {threshold} outside [-1, 1]")));
    }
    let scores = score_dataset(dataset, model)?;
    let confusion = confusion_at(&scores, threshold);
    Ok(Evaluation { threshold, confusion, metrics: MetricsReport::from_confusion(&confusion) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint<T> {
    pub threshold: T,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport<T>,
    pub youden: Metric<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recommendation<T> {
    pub threshold: T,
    pub youden: T,
    pub rule: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSweep<T> {
    pub points: Vec<SweepPoint<T>>,
    /// `None` when no point has a defined Youden index (one class absent).
    pub recommended: Option<Recommendation<T>>,
}

/// `points` evenly spaced thresholds over `[-1, 1]`, endpoints included.
pub fn default_grid<T: Scalar>(points: usize) -> Vec<T> {
    if points == 1 {
        return vec![-T::one()];
    }
    let last = T::lit((points - 1) as f64);
    (0..points).map(|k| (T::lit((2 * k) as f64) - last) / last).collect()
}

fn check_grid<T: Scalar>(grid: &[T]) -> Result<(), EvalError> {
    if grid.is_empty() {
        return Err(EvalError::Grid("grid is empty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(**t >= -T::one() && **t <= T::one())) {
        return Err(EvalError::Grid(format!("threshold {t} outside [-1, 1]")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(EvalError::Grid("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

/// Sweep over precomputed scores.
pub fn sweep_scores<T: Scalar>(scores: &[(T, Label)], grid: &[T]) -> Result<ThresholdSweep<T>, EvalError> {
    check_grid(grid)?;
    let points: Vec<SweepPoint<T>> = grid
        .iter()
        .map(|&threshold| {
            let confusion = confusion_at(scores, threshold);
            let metrics = MetricsReport::from_confusion(&confusion);
            SweepPoint { threshold, confusion, metrics, youden: metrics.youden() }
        })
        .collect();
    // Youden's index scaled by P * N is tp * N + tn * P - P * N, so ranking
    // on integer counts keeps exact ties exact.
    let mut best: Option<(&SweepPoint<T>, (u128, usize))> = None;
    for p in points.iter().filter(|p| p.youden.is_defined()) {
        let cm = &p.confusion;
        let key = (
            cm.tp as u128 * cm.actual_negative() as u128 + cm.tn as u128 * cm.actual_positive() as u128,
            cm.tp,
        );
        if best.map_or(true, |(_, k)| key > k) {
            best = Some((p, key));
        }
    }
    let recommended = best.map(|(p, _)| Recommendation {
        threshold: p.threshold,
        youden: p.youden.value().expect("defined"),
        rule: YOUDEN_RULE,
    });
    Ok(ThresholdSweep { points, recommended })
}

pub fn sweep<T: Scalar>(dataset: &LabeledDataset, model: &CadModel<T>, grid: &[T]) -> Result<ThresholdSweep<T>, EvalError> {
    check_grid(grid)?;
    sweep_scores(&score_dataset(dataset, model)?, grid)
}

/// CSV with columns threshold, tp, fp, fn, tn, sensitivity, specificity, youden.
pub fn write_sweep_csv<T: Scalar, W: Write>(writer: W, sweep: &ThresholdSweep<T>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["threshold", "tp", "fp", "fn", "tn", "sensitivity", "specificity", "youden"])?;
    for p in &sweep.points {
        w.write_record([
            p.threshold.to_string(),
            p.confusion.tp.to_string(),
            p.confusion.fp.to_string(),
            p.confusion.fn_.to_string(),
            p.confusion.tn.to_string(),
            p.metrics.sensitivity.to_string(),
            p.metrics.specificity.to_string(),
            p.youden.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
