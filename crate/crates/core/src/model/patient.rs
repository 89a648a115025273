//! Patient records: raw attribute input, validation and the validated form.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use super::concepts::{ConceptDef, ConceptId, ExclusivityGroup, Stage, INPUT_COUNT};

/// Ground truth from angiography: stenosis of 70% or more is diseased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Diseased,
    Healthy,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Diseased => "diseased",
            Label::Healthy => "healthy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "diseased" | "1" | "cad" => Some(Label::Diseased),
            "healthy" | "0" | "normal" => Some(Label::Healthy),
            _ => None,
        }
    }

    pub fn from_stenosis_percent(stenosis: f64) -> Self {
        if stenosis >= 70.0 {
            Label::Diseased
        } else {
            Label::Healthy
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("invalid patient record: {}", summary(.issues))]
pub struct ValidationError {
    pub issues: Vec<FieldIssue>,
}

fn summary(issues: &[FieldIssue]) -> String {
    issues.iter().map(|i| format!("{}: {}", i.field, i.message)).collect::<Vec<_>>().join("; ")
}

impl ValidationError {
    pub fn single(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { issues: vec![FieldIssue { field: field.into(), message: message.into() }] }
    }

    pub fn fields(&self) -> Vec<&str> {
        self.issues.iter().map(|i| i.field.as_str()).collect()
    }
}

pub(crate) const AGE_FIELD: &str = "age";
const ID_FIELDS: [&str; 2] = ["case_id", "id"];
const LABEL_FIELD: &str = "label";
const TYPICAL_ANGINA_FIELDS: [&str; 3] = ["typical_angina_pectoris", "typical angina pectoris", "typical_angina"];

/// Unvalidated attribute map as found in a patient file or CSV row.
///
/// Keys may be concept ids (`A30`), attribute keys (`scintigraphy_abnormal`)
/// or the clinical names; values use the clinical vocabulary. `age`,
/// `case_id` and `label` are recognized as well. Empty values mean absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct PatientInput {
    fields: BTreeMap<String, String>,
}

impl PatientInput {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.fields.insert(key.into(), value.into());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.fields.remove(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

impl FromIterator<(String, String)> for PatientInput {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        Self { fields: iter.into_iter().collect() }
    }
}

impl<'de> Deserialize<'de> for PatientInput {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde_json::Value;
        let raw = BTreeMap::<String, Value>::deserialize(deserializer)?;
        let mut fields = BTreeMap::new();
        for (k, v) in raw {
            let text = match v {
                Value::Null => continue,
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                Value::Bool(true) => "yes".into(),
                Value::Bool(false) => "no".into(),
                other => {
                    return Err(serde::de::Error::custom(format!("attribute `{k}` has non-scalar value {other}")))
                }
            };
            fields.insert(k, text);
        }
        Ok(Self { fields })
    }
}

/// Validated patient: one stage per input concept.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: Option<String>,
    pub label: Option<Label>,
    pub age: Option<f64>,
    stages: [Stage; INPUT_COUNT],
}

impl PatientRecord {
    /// A record with every attribute absent.
    pub fn empty() -> Self {
        Self { id: None, label: None, age: None, stages: [Stage::No; INPUT_COUNT] }
    }

    pub fn stage(&self, concept: ConceptId) -> Stage {
        if concept.is_input() {
            self.stages[concept.index()]
        } else {
            Stage::No
        }
    }

    pub fn stages(&self) -> &[Stage; INPUT_COUNT] {
        &self.stages
    }

    /// Sets a stage without validation; callers re-validate through
    /// [`super::CadModel::validate_record`] when it matters.
    pub fn set_stage(&mut self, concept: ConceptId, stage: Stage) {
        self.stages[concept.index()] = stage;
    }

    pub fn with_stage(mut self, concept: ConceptId, stage: Stage) -> Self {
        self.set_stage(concept, stage);
        self
    }

    /// Canonical attribute form: present concepts by key, plus id, label and
    /// age when known.
    pub fn to_input(&self, concepts: &[ConceptDef]) -> PatientInput {
        let mut input = PatientInput::new();
        if let Some(id) = &self.id {
            input.insert(ID_FIELDS[0], id.clone());
        }
        if let Some(label) = self.label {
            input.insert(LABEL_FIELD, label.as_str());
        }
        if let Some(age) = self.age {
            input.insert(AGE_FIELD, age.to_string());
        }
        for c in concepts.iter().filter(|c| c.id.is_input()) {
            let s = self.stage(c.id);
            if s.is_present() {
                input.insert(c.key.clone(), s.as_str());
            }
        }
        input
    }
}

/// Age band concept for a numeric age: `<40`, `[40, 50)`, `[50, 60]`, `>60`.
pub fn age_band(age: f64) -> ConceptId {
    let n = if age < 40.0 {
        7
    } else if age < 50.0 {
        8
    } else if age <= 60.0 {
        9
    } else {
        10
    };
    ConceptId::new(n).expect("age band id")
}

fn normalize(key: &str) -> String {
    key.trim().to_lowercase()
}

/// Finds the concept an attribute key refers to.
pub(crate) fn resolve<'a>(concepts: &'a [ConceptDef], key: &str) -> Option<&'a ConceptDef> {
    let norm = normalize(key);
    if let Ok(id) = norm.parse::<ConceptId>() {
        return concepts.iter().find(|c| c.id == id);
    }
    concepts.iter().find(|c| c.key == norm || c.name.to_lowercase() == norm)
}

pub(crate) fn is_reserved(key: &str) -> bool {
    let norm = normalize(key);
    norm == AGE_FIELD || norm == LABEL_FIELD || ID_FIELDS.contains(&norm.as_str())
}

/// Validates raw input against the concept table, collecting every issue.
pub fn parse_patient(concepts: &[ConceptDef], input: &PatientInput) -> Result<PatientRecord, ValidationError> {
    let mut issues = Vec::new();
    let mut issue = |field: &str, message: String| issues.push(FieldIssue { field: field.to_string(), message });
    let mut record = PatientRecord::empty();
    let mut explicit: BTreeMap<ConceptId, (&str, Stage)> = BTreeMap::new();

    for (key, value) in input.iter() {
        let norm = normalize(key);
        let value = value.trim();
        if ID_FIELDS.contains(&norm.as_str()) {
            if !value.is_empty() {
                record.id = Some(value.to_string());
            }
            continue;
        }
        if norm == LABEL_FIELD {
            if !value.is_empty() {
                match Label::parse(value) {
                    Some(l) => record.label = Some(l),
                    None => issue(key, format!("label must be `diseased` or `healthy`, got `{value}`")),
                }
            }
            continue;
        }
        if norm == AGE_FIELD {
            if !value.is_empty() {
                match value.parse::<f64>() {
                    Ok(a) if a.is_finite() && (0.0..=130.0).contains(&a) => record.age = Some(a),
                    _ => issue(key, format!("age must be a number of years in [0, 130], got `{value}`")),
                }
            }
            continue;
        }
        if TYPICAL_ANGINA_FIELDS.contains(&norm.as_str()) {
            match value.parse::<Stage>() {
                Ok(Stage::No) => {}
                _ if value.is_empty() => {}
                Ok(Stage::Yes) => issue(
                    key,
                    "typical angina pectoris is excluded from the model: it requires no further \
                     examination and should be referred directly"
                        .into(),
                ),
                _ => issue(key, format!("expected `yes` or `no`, got `{value}`")),
            }
            continue;
        }
        let Some(concept) = resolve(concepts, key) else {
            issue(key, "unknown attribute".into());
            continue;
        };
        if !concept.id.is_input() {
            issue(key, format!("{} is the model output and cannot be set", concept.id));
            continue;
        }
        if value.is_empty() {
            continue;
        }
        let stage = match value.parse::<Stage>() {
            Ok(s) if concept.accepts(s) => s,
            _ => {
                let allowed: Vec<&str> = std::iter::once(Stage::No)
                    .chain(concept.present_values())
                    .map(Stage::as_str)
                    .collect();
                issue(key, format!("`{value}` is not allowed for {}; expected one of: {}", concept.name, allowed.join(", ")));
                continue;
            }
        };
        if let Some((other, _)) = explicit.insert(concept.id, (key, stage)) {
            issue(key, format!("{} already given as `{other}`", concept.id));
            continue;
        }
        record.stages[concept.id.index()] = stage;
    }

    if let Some(age) = record.age {
        let band = age_band(age);
        for c in concepts.iter().filter(|c| c.group == Some(ExclusivityGroup::AgeBand)) {
            let want = if c.id == band { Stage::Yes } else { Stage::No };
            match explicit.get(&c.id) {
                Some((field, s)) if *s != want => {
                    issue(field, format!("inconsistent with age {age}, which falls in `{}`", concept_name(concepts, band)))
                }
                _ => {}
            }
        }
        record.stages[band.index()] = Stage::Yes;
    }

    issues.extend(exclusivity_issues(concepts, &record));
    if issues.is_empty() {
        Ok(record)
    } else {
        Err(ValidationError { issues })
    }
}

fn concept_name(concepts: &[ConceptDef], id: ConceptId) -> &str {
    concepts.iter().find(|c| c.id == id).map(|c| c.name.as_str()).unwrap_or("?")
}

/// One issue per group with more than one active member.
pub(crate) fn exclusivity_issues(concepts: &[ConceptDef], record: &PatientRecord) -> Vec<FieldIssue> {
    let mut by_group: BTreeMap<ExclusivityGroup, Vec<&ConceptDef>> = BTreeMap::new();
    for c in concepts {
        if let Some(g) = c.group {
            if record.stage(c.id).is_present() {
                by_group.entry(g).or_default().push(c);
            }
        }
    }
    by_group
        .into_iter()
        .filter(|(_, active)| active.len() > 1)
        .map(|(group, active)| FieldIssue {
            field: active.iter().map(|c| c.key.as_str()).collect::<Vec<_>>().join(","),
            message: format!(
                "at most one of the {group:?} group may be present, got {}",
                active.iter().map(|c| c.id.to_string()).collect::<Vec<_>>().join(", ")
            ),
        })
        .collect()
}
