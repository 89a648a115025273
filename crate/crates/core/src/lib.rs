//! Fuzzy cognitive map engine and a coronary artery disease risk model
//! built on it.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`, which is what the CLI and service use.
//!
//! ```
//! use fcm_cad::{CadModel, PatientInput};
//!
//! let model = CadModel::bundled();
//! let patient = PatientInput::new()
//!     .with("gender_male", "yes")
//!     .with("scintigraphy_abnormal", "abnormal");
//! let record = model.parse_patient(&patient).unwrap();
//! let diagnosis = model.diagnose(&record, model.default_threshold()).unwrap();
//! assert!((diagnosis.normalized_score - 1.0_f64.tanh()).abs() < 1e-15);
//! ```

pub mod eval;
pub mod fcm;
pub mod fuzzy;
pub mod model;
mod scalar;

pub use scalar::Scalar;

pub use eval::{
    ConfusionMatrix, DatasetError, DatasetProvenance, EvalError, LabeledDataset, Metric, SyntheticError,
};
pub use fcm::{FcmError, InferenceStatus};
pub use fuzzy::{ExpertOpinionSet, FuzzyError, Grade, LinguisticTerm, Sign};
pub use model::{
    Classification, ConceptDef, ConceptId, DiagnoseError, Label, ModelDefinition, ModelError, PatientInput,
    PatientRecord, ProbabilityBand, Provenance, Rule, Stage, ValidationError,
};

/// Scalar type used by the concrete aliases below.
pub type Real = f64;

pub type StateVector = fcm::StateVector<Real>;
pub type WeightMatrix = fcm::WeightMatrix<Real>;
pub type ConvergenceConfig = fcm::ConvergenceConfig<Real>;
pub type InferenceResult = fcm::InferenceResult<Real>;
pub type MembershipFunction = fuzzy::MembershipFunction<Real>;
pub type AggregatedCurve = fuzzy::AggregatedCurve<Real>;
pub type CadModel = model::CadModel<Real>;
pub type WeightSet = model::WeightSet<Real>;
pub type Diagnosis = model::Diagnosis<Real>;
pub type Contribution = model::Contribution<Real>;
pub type MetricsReport = eval::MetricsReport<Real>;
pub type Evaluation = eval::Evaluation<Real>;
pub type ThresholdSweep = eval::ThresholdSweep<Real>;
