//! The coronary artery disease instantiation of the map.
//!
//! Thirty input concepts feed a single output concept (A31) in a star
//! topology. A patient's evidence is encoded into concept values, the
//! conditional rules adjust the weights for that patient, and the weighted
//! sum is squashed into a normalized score that is banded and thresholded.

mod bands;
mod concepts;
mod patient;
mod rules;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bands::{BandBoundary, BandTable, ProbabilityBand};
pub use concepts::{ConceptDef, ConceptId, ConceptKind, ExclusivityGroup, Stage, CONCEPT_COUNT, INPUT_COUNT};
pub use patient::{age_band, parse_patient, FieldIssue, Label, PatientInput, PatientRecord, ValidationError};
pub use rules::{
    apply_rules, Condition, Effect, Modifier, Provenance, Rule, RuleOutcome, WeightEntry, WeightSet, WeightSetDef,
};

use crate::fcm::{self, ConvergenceConfig, FcmError, InferenceResult, StateVector, WeightMatrix};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

const BUNDLED_MODEL: &str = include_str!("../../models/default-model.json");

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid model definition: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// The model file: concepts, weights, rules, staging and bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDefinition {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub concepts: Vec<ConceptDef>,
    pub weights: WeightSetDef,
    pub rules: Vec<Rule>,
    /// Numeric encoding of each clinical value.
    pub staging: BTreeMap<Stage, f64>,
    pub bands: Vec<BandBoundary>,
    pub default_threshold: f64,
}

impl ModelDefinition {
    pub fn bundled() -> Self {
        serde_json::from_str(BUNDLED_MODEL).expect("bundled model parses")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Structural checks beyond what the JSON shape enforces. Returns every
    /// problem found.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }

        if self.concepts.len() != CONCEPT_COUNT {
            errs.push(format!("expected {CONCEPT_COUNT} concepts, got {}", self.concepts.len()));
        }
        let mut keys = BTreeSet::new();
        for (i, c) in self.concepts.iter().enumerate() {
            if c.id.index() != i {
                errs.push(format!("concept #{} has id {}, expected A{}", i + 1, c.id, i + 1));
            }
            if !keys.insert(c.key.as_str()) {
                errs.push(format!("duplicate concept key `{}`", c.key));
            }
            let is_output = c.kind == ConceptKind::Output;
            if is_output != (c.id == ConceptId::OUTPUT) {
                errs.push(format!("{}: only A{CONCEPT_COUNT} may be (and must be) the output", c.id));
            }
            if is_output {
                if !c.values.is_empty() || c.group.is_some() {
                    errs.push(format!("{}: the output takes no input values or group", c.id));
                }
            } else if c.present_values().next().is_none() {
                errs.push(format!("{}: no value carries evidence", c.id));
            }
            for v in &c.values {
                if !self.staging.contains_key(v) {
                    errs.push(format!("{}: value `{v}` has no staging encoding", c.id));
                }
            }
        }

        match self.staging.get(&Stage::No) {
            Some(&v) if v == 0.0 => {}
            _ => errs.push("staging must encode `no` as 0".into()),
        }
        for (stage, &v) in &self.staging {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("staging for `{stage}` is {v}, outside [0, 1]"));
            }
        }

        if let Err(e) = WeightSet::<f64>::from_def(&self.weights) {
            errs.push(format!("weights: {e}"));
        }

        let mut rule_ids = BTreeSet::new();
        for r in &self.rules {
            if !rule_ids.insert(r.id.as_str()) {
                errs.push(format!("duplicate rule id `{}`", r.id));
            }
            for c in r.when.concepts() {
                if !c.is_input() {
                    errs.push(format!("rule `{}` conditions on non-input {c}", r.id));
                }
            }
            for e in &r.effects {
                if !e.target.is_input() {
                    errs.push(format!("rule `{}` targets non-input {}", r.id, e.target));
                }
            }
        }

        if let Err(e) = BandTable::<f64>::new(&self.bands) {
            errs.push(format!("bands: {e}"));
        }
        if !(-1.0..=1.0).contains(&self.default_threshold) {
            errs.push(format!("default_threshold {} outside [-1, 1]", self.default_threshold));
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(errs))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Diseased,
    Healthy,
}

impl From<Classification> for Label {
    fn from(c: Classification) -> Self {
        match c {
            Classification::Diseased => Label::Diseased,
            Classification::Healthy => Label::Healthy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution<T> {
    pub concept: ConceptId,
    pub name: String,
    pub value: T,
    pub weight: T,
    pub contribution: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct Diagnosis<T> {
    pub raw_score: T,
    pub normalized_score: T,
    pub band: ProbabilityBand,
    pub classification: Classification,
    pub threshold: T,
    /// One entry per input concept, A1..A30. Summing `contribution` in this
    /// order reproduces `raw_score` exactly.
    pub contributions: Vec<Contribution<T>>,
    pub effective_weights: WeightSet<T>,
    pub fired_rules: Vec<String>,
}

#[derive(Debug, Error)]
pub enum DiagnoseError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("threshold {0} outside [-1, 1]")]
    Threshold(f64),
    #[error(transparent)]
    Engine(#[from] FcmError),
}

/// A loaded, validated model. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct CadModel<T> {
    definition: ModelDefinition,
    weights: WeightSet<T>,
    staging: BTreeMap<Stage, T>,
    bands: BandTable<T>,
    default_threshold: T,
}

impl<T: Scalar> CadModel<T> {
    pub fn from_definition(definition: ModelDefinition) -> Result<Self, ModelError> {
        definition.validate()?;
        let weights = WeightSet::from_def(&definition.weights).map_err(|e| ModelError::Invalid(vec![e]))?;
        let bands = BandTable::new(&definition.bands).map_err(|e| ModelError::Invalid(vec![e]))?;
        let staging = definition.staging.iter().map(|(&s, &v)| (s, T::lit(v))).collect();
        let default_threshold = T::lit(definition.default_threshold);
        Ok(Self { definition, weights, staging, bands, default_threshold })
    }

    /// The model shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_definition(ModelDefinition::bundled()).expect("bundled model is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_definition(ModelDefinition::load(path)?)
    }

    pub fn definition(&self) -> &ModelDefinition {
        &self.definition
    }

    pub fn concepts(&self) -> &[ConceptDef] {
        &self.definition.concepts
    }

    pub fn concept(&self, id: ConceptId) -> &ConceptDef {
        &self.definition.concepts[id.index()]
    }

    pub fn rules(&self) -> &[Rule] {
        &self.definition.rules
    }

    pub fn bands(&self) -> &BandTable<T> {
        &self.bands
    }

    pub fn default_threshold(&self) -> T {
        self.default_threshold
    }

    pub fn baseline_weights(&self) -> &WeightSet<T> {
        &self.weights
    }

    /// Same model with a different base weight set.
    pub fn with_weights(mut self, weights: WeightSet<T>) -> Self {
        self.definition.weights = weights.to_def();
        self.weights = weights;
        self
    }

    pub fn parse_patient(&self, input: &PatientInput) -> Result<PatientRecord, ValidationError> {
        parse_patient(self.concepts(), input)
    }

    /// Checks a programmatically built record against the concept table.
    pub fn validate_record(&self, record: &PatientRecord) -> Result<(), ValidationError> {
        let mut issues = Vec::new();
        for c in self.concepts().iter().filter(|c| c.id.is_input()) {
            let s = record.stage(c.id);
            if !c.accepts(s) {
                issues.push(FieldIssue { field: c.key.clone(), message: format!("`{s}` is not allowed for {}", c.name) });
            }
        }
        issues.extend(patient::exclusivity_issues(self.concepts(), record));
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { issues })
        }
    }

    /// Re-validates `record` with `overrides` layered on top of its
    /// canonical attribute form. An `age` override replaces any age band.
    pub fn apply_overrides(&self, record: &PatientRecord, overrides: &PatientInput) -> Result<PatientRecord, ValidationError> {
        let mut input = record.to_input(self.concepts());
        let mut issues = Vec::new();
        for (key, value) in overrides.iter() {
            let canonical = if patient::is_reserved(key) {
                key.trim().to_lowercase()
            } else if let Some(c) = patient::resolve(self.concepts(), key) {
                c.key.clone()
            } else {
                issues.push(FieldIssue { field: key.to_string(), message: "unknown attribute".into() });
                continue;
            };
            if canonical == patient::AGE_FIELD {
                for c in self.concepts().iter().filter(|c| c.group == Some(ExclusivityGroup::AgeBand)) {
                    input.remove(&c.key);
                }
            }
            input.insert(canonical, value);
        }
        if !issues.is_empty() {
            return Err(ValidationError { issues });
        }
        self.parse_patient(&input)
    }

    pub fn stage_value(&self, stage: Stage) -> T {
        self.staging.get(&stage).copied().unwrap_or_else(T::zero)
    }

    /// Concept values for the record; the output concept starts at 0.
    pub fn encode_patient(&self, record: &PatientRecord) -> StateVector<T> {
        let mut values: Vec<T> = record.stages().iter().map(|&s| self.stage_value(s)).collect();
        values.push(T::zero());
        StateVector::new(values).expect("staging values validated to [0, 1]")
    }

    pub fn apply_rules(&self, record: &PatientRecord, base: &WeightSet<T>) -> WeightSet<T> {
        apply_rules(self.rules(), record, base).weights
    }

    pub fn band_of(&self, v: T) -> Result<ProbabilityBand, String> {
        self.bands.band_of(v)
    }

    pub fn diagnose(&self, record: &PatientRecord, threshold: T) -> Result<Diagnosis<T>, DiagnoseError> {
        if !(threshold >= -T::one() && threshold <= T::one()) {
            return Err(DiagnoseError::Threshold(threshold.as_f64()));
        }
        let RuleOutcome { weights, fired } = apply_rules(self.rules(), record, &self.weights);
        let state = self.encode_patient(record);
        let inputs = &state.values()[..INPUT_COUNT];
        let raw_score = fcm::single_pass_score(inputs, weights.as_slice())?;
        let normalized_score = fcm::squash(raw_score)?;
        let band = self.bands.band_of(normalized_score).expect("tanh stays within [-1, 1]");
        let classification =
            if normalized_score >= threshold { Classification::Diseased } else { Classification::Healthy };
        let contributions = ConceptId::inputs()
            .map(|c| {
                let value = inputs[c.index()];
                let weight = weights.get(c);
                Contribution { concept: c, name: self.concept(c).name.clone(), value, weight, contribution: value * weight }
            })
            .collect();
        Ok(Diagnosis {
            raw_score,
            normalized_score,
            band,
            classification,
            threshold,
            contributions,
            effective_weights: weights,
            fired_rules: fired,
        })
    }

    /// Iterative inference on the star map with the patient's evidence
    /// clamped. The output settles at `v = tanh(v + raw_score)`.
    pub fn iterate(&self, record: &PatientRecord, config: &ConvergenceConfig<T>) -> Result<InferenceResult<T>, FcmError> {
        let weights = self.apply_rules(record, &self.weights);
        let matrix = WeightMatrix::star(weights.as_slice())?;
        let clamped: Vec<usize> = (0..INPUT_COUNT).collect();
        fcm::run_clamped(&self.encode_patient(record), &matrix, &clamped, config)
    }

    /// Exact extrema of the raw score over every feasible record, for fixed
    /// weights. Exclusivity groups and ungrouped concepts are independent,
    /// so each is optimized on its own and the results summed.
    pub fn score_bounds(&self, weights: &WeightSet<T>) -> (T, T) {
        let mut units: BTreeMap<Option<ExclusivityGroup>, Vec<Vec<T>>> = BTreeMap::new();
        for c in self.concepts().iter().filter(|c| c.id.is_input()) {
            let w = weights.get(c.id);
            let options: Vec<T> = c.present_values().map(|s| self.stage_value(s) * w).collect();
            units.entry(c.group).or_default().push(options);
        }
        let mut lo = T::zero();
        let mut hi = T::zero();
        for (group, members) in units {
            match group {
                // one active member at most: pick the best single option
                Some(_) => {
                    let all = members.iter().flatten().copied();
                    lo = lo + all.clone().fold(T::zero(), T::min);
                    hi = hi + all.fold(T::zero(), T::max);
                }
                None => {
                    for options in members {
                        lo = lo + options.iter().copied().fold(T::zero(), T::min);
                        hi = hi + options.iter().copied().fold(T::zero(), T::max);
                    }
                }
            }
        }
        (lo, hi)
    }
}
