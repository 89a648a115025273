use std::fmt;

use serde::{Serialize, Serializer};

use crate::model::Label;
use crate::scalar::Scalar;

/// A ratio that may be undefined because its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric<T> {
    Defined(T),
    Undefined,
}

impl<T: Scalar> Metric<T> {
    pub fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Metric::Undefined
        } else {
            Metric::Defined(T::lit(num as f64) / T::lit(den as f64))
        }
    }

    pub fn value(self) -> Option<T> {
        match self {
            Metric::Defined(v) => Some(v),
            Metric::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Metric::Defined(_))
    }
}

impl<T: Scalar> fmt::Display for Metric<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Defined(v) => match f.precision() {
                Some(p) => write!(f, "{:.*}", p, v),
                None => write!(f, "{v}"),
            },
            Metric::Undefined => f.pad("undefined"),
        }
    }
}

/// Serialized as a number, or the string `"undefined"`.
impl<T: Serialize> Serialize for Metric<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Defined(v) => v.serialize(serializer),
            Metric::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Diseased, Label::Diseased) => self.tp += 1,
            (Label::Diseased, Label::Healthy) => self.fp += 1,
            (Label::Healthy, Label::Diseased) => self.fn_ += 1,
            (Label::Healthy, Label::Healthy) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn actual_positive(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn actual_negative(&self) -> usize {
        self.fp + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport<T> {
    pub accuracy: Metric<T>,
    pub sensitivity: Metric<T>,
    pub specificity: Metric<T>,
    pub ppv: Metric<T>,
    pub npv: Metric<T>,
}

impl<T: Scalar> MetricsReport<T> {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        Self {
            accuracy: Metric::ratio(cm.tp + cm.tn, cm.total()),
            sensitivity: Metric::ratio(cm.tp, cm.tp + cm.fn_),
            specificity: Metric::ratio(cm.tn, cm.tn + cm.fp),
            ppv: Metric::ratio(cm.tp, cm.tp + cm.fp),
            npv: Metric::ratio(cm.tn, cm.tn + cm.fn_),
        }
    }

    /// Sensitivity + specificity - 1.
    pub fn youden(&self) -> Metric<T> {
        match (self.sensitivity, self.specificity) {
            (Metric::Defined(se), Metric::Defined(sp)) => Metric::Defined(se + sp - T::one()),
            _ => Metric::Undefined,
        }
    }
}

/// Aligned plain-text table of a confusion matrix and its metrics.
pub fn metrics_table<T: Scalar>(cm: &ConfusionMatrix, m: &MetricsReport<T>) -> String {
    let pct = |x: Metric<T>| match x {
        Metric::Defined(v) => format!("{:>9.2}%", v.as_f64() * 100.0),
        Metric::Undefined => format!("{:>10}", "undefined"),
    };
    let mut out = String::new();
    out.push_str(&format!("{:<22}{:>10}\n", "true positives", cm.tp));
    out.push_str(&format!("{:<22}{:>10}\n", "false positives", cm.fp));
    out.push_str(&format!("{:<22}{:>10}\n", "false negatives", cm.fn_));
    out.push_str(&format!("{:<22}{:>10}\n", "true negatives", cm.tn));
    out.push_str(&format!("{:<22}{}\n", "accuracy", pct(m.accuracy)));
    out.push_str(&format!("{:<22}{}\n", "sensitivity", pct(m.sensitivity)));
    out.push_str(&format!("{:<22}{}\n", "specificity", pct(m.specificity)));
    out.push_str(&format!("{:<22}{}\n", "ppv", pct(m.ppv)));
    out.push_str(&format!("{:<22}{}\n", "npv", pct(m.npv)));
    out
}
