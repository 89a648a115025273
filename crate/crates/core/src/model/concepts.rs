use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Number of concepts in the map, output included.
pub const CONCEPT_COUNT: usize = 31;
/// Number of input concepts (A1..A30).
pub const INPUT_COUNT: usize = 30;

/// Concept identifier `A1`..`A31`, stored as its 1-based number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptId(u8);

impl ConceptId {
    pub const OUTPUT: ConceptId = ConceptId(CONCEPT_COUNT as u8);

    pub fn new(number: usize) -> Option<Self> {
        (1..=CONCEPT_COUNT).contains(&number).then_some(Self(number as u8))
    }

    /// Zero-based position in the state vector.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::new(index + 1)
    }

    pub fn number(self) -> usize {
        self.0 as usize
    }

    pub fn is_input(self) -> bool {
        self.index() < INPUT_COUNT
    }

    pub fn inputs() -> impl Iterator<Item = ConceptId> {
        (1..=INPUT_COUNT).map(|n| ConceptId(n as u8))
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

impl FromStr for ConceptId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        t.strip_prefix('A')
            .or_else(|| t.strip_prefix('a'))
            .and_then(|n| n.parse::<usize>().ok())
            .and_then(ConceptId::new)
            .ok_or_else(|| format!("`{s}` is not a concept id (A1..A31)"))
    }
}

impl Serialize for ConceptId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConceptId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptKind {
    Symptom,
    Demographic,
    History,
    DiagnosticTest,
    Output,
}

/// Concepts of which at most one may be active for a patient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusivityGroup {
    SymptomType,
    Gender,
    AgeBand,
    Ecg,
    Echo,
    Treadmill,
    DynamicEcho,
    Scintigraphy,
}

/// A patient-level attribute value from the clinical vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    #[default]
    No,
    Yes,
    Occasionally,
    Relatively,
    Little,
    Doubtful,
    Abnormal,
    #[serde(rename = "definitely abnormal", alias = "definitely_abnormal")]
    DefinitelyAbnormal,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::No,
        Stage::Yes,
        Stage::Occasionally,
        Stage::Relatively,
        Stage::Little,
        Stage::Doubtful,
        Stage::Abnormal,
        Stage::DefinitelyAbnormal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::No => "no",
            Stage::Yes => "yes",
            Stage::Occasionally => "occasionally",
            Stage::Relatively => "relatively",
            Stage::Little => "little",
            Stage::Doubtful => "doubtful",
            Stage::Abnormal => "abnormal",
            Stage::DefinitelyAbnormal => "definitely abnormal",
        }
    }

    pub fn is_present(self) -> bool {
        self != Stage::No
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', " ");
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == norm)
            .ok_or_else(|| format!("unknown value `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptDef {
    pub id: ConceptId,
    /// Machine-friendly attribute name used in patient files and CSV headers.
    pub key: String,
    /// Clinical wording.
    pub name: String,
    pub kind: ConceptKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<ExclusivityGroup>,
    /// Values a patient may present with. `no` is always accepted.
    pub values: Vec<Stage>,
}

impl ConceptDef {
    pub fn accepts(&self, stage: Stage) -> bool {
        stage == Stage::No || self.values.contains(&stage)
    }

    /// Values that carry evidence, i.e. everything but `no`.
    pub fn present_values(&self) -> impl Iterator<Item = Stage> + '_ {
        self.values.iter().copied().filter(|s| s.is_present())
    }
}
