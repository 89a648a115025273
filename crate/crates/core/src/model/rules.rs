//! Conditional weight rules and the weight sets they act on.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use super::concepts::{ConceptId, Stage, INPUT_COUNT};
use super::patient::PatientRecord;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    BaselineTable4,
    RuleAdjusted,
    UserDefuzzified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub concept: ConceptId,
    pub weight: f64,
}

/// File form of a weight set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSetDef {
    pub provenance: Provenance,
    pub values: Vec<WeightEntry>,
}

/// Signed weight of every input concept toward the output.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet<T> {
    weights: [T; INPUT_COUNT],
    provenance: Provenance,
}

impl<T: Scalar> WeightSet<T> {
    pub fn new(weights: [T; INPUT_COUNT], provenance: Provenance) -> Result<Self, String> {
        for (i, w) in weights.iter().enumerate() {
            if !(*w >= -T::one() && *w <= T::one()) {
                return Err(format!("weight of A{} is {w}, outside [-1, 1]", i + 1));
            }
        }
        Ok(Self { weights, provenance })
    }

    pub fn zeros() -> Self {
        Self { weights: [T::zero(); INPUT_COUNT], provenance: Provenance::UserDefuzzified }
    }

    pub fn from_def(def: &WeightSetDef) -> Result<Self, String> {
        let mut seen = [false; INPUT_COUNT];
        let mut weights = [T::zero(); INPUT_COUNT];
        for entry in &def.values {
            if !entry.concept.is_input() {
                return Err(format!("{} is not an input concept", entry.concept));
            }
            let i = entry.concept.index();
            if std::mem::replace(&mut seen[i], true) {
                return Err(format!("weight for {} given twice", entry.concept));
            }
            weights[i] = T::lit(entry.weight);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(format!("weight for A{} missing", missing + 1));
        }
        Self::new(weights, def.provenance)
    }

    pub fn to_def(&self) -> WeightSetDef {
        WeightSetDef {
            provenance: self.provenance,
            values: ConceptId::inputs()
                .map(|c| WeightEntry { concept: c, weight: self.get(c).as_f64() })
                .collect(),
        }
    }

    pub fn get(&self, concept: ConceptId) -> T {
        self.weights[concept.index()]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    fn set(&mut self, concept: ConceptId, weight: T) {
        self.weights[concept.index()] = weight;
    }
}

impl<T: Scalar> Serialize for WeightSet<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let def = self.to_def();
        let mut s = serializer.serialize_struct("WeightSet", 2)?;
        s.serialize_field("provenance", &def.provenance)?;
        s.serialize_field("values", &def.values)?;
        s.end()
    }
}

/// Predicate over a patient record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// The concept carries any evidence.
    Active(ConceptId),
    /// The concept was reported as definitely abnormal.
    Definite(ConceptId),
    All(Vec<Condition>),
}

impl Condition {
    pub fn holds(&self, record: &PatientRecord) -> bool {
        match self {
            Condition::Active(c) => record.stage(*c).is_present(),
            Condition::Definite(c) => record.stage(*c) == Stage::DefinitelyAbnormal,
            Condition::All(cs) => cs.iter().all(|c| c.holds(record)),
        }
    }

    pub fn concepts(&self) -> Vec<ConceptId> {
        match self {
            Condition::Active(c) | Condition::Definite(c) => vec![*c],
            Condition::All(cs) => cs.iter().flat_map(Condition::concepts).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modifier {
    SharpReduce,
    MediumReduce,
    AverageIncrease,
    SignificantIncrease,
    RelativeIncrease,
    ZeroOut,
}

impl Modifier {
    pub fn apply<T: Scalar>(self, w: T) -> T {
        let one = T::one();
        match self {
            Modifier::SharpReduce => w * T::lit(0.5),
            Modifier::MediumReduce => w * T::lit(0.75),
            Modifier::AverageIncrease | Modifier::RelativeIncrease => {
                sign(w) * (w.abs() * T::lit(1.25)).min(one)
            }
            // half the remaining gap to the unit bound on the weight's side
            Modifier::SignificantIncrease => w + sign(w) * (one - w.abs()) / T::lit(2.0),
            Modifier::ZeroOut => T::zero(),
        }
    }
}

fn sign<T: Scalar>(w: T) -> T {
    if w > T::zero() {
        T::one()
    } else if w < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub target: ConceptId,
    pub modifier: Modifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub when: Condition,
    pub effects: Vec<Effect>,
}

/// Weights after the rules that fired for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleOutcome<T> {
    pub weights: WeightSet<T>,
    pub fired: Vec<String>,
}

/// Applies every matching rule once, in table order, starting from `base`.
pub fn apply_rules<T: Scalar>(rules: &[Rule], record: &PatientRecord, base: &WeightSet<T>) -> RuleOutcome<T> {
    let mut weights = base.clone();
    let mut fired = Vec::new();
    for rule in rules.iter().filter(|r| r.when.holds(record)) {
        for effect in &rule.effects {
            let w = effect.modifier.apply(weights.get(effect.target));
            weights.set(effect.target, w.max(-T::one()).min(T::one()));
        }
        fired.push(rule.id.clone());
    }
    if !fired.is_empty() {
        weights.provenance = Provenance::RuleAdjusted;
    }
    RuleOutcome { weights, fired }
}
