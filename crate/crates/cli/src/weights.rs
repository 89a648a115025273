//! Weight-set files: reading them onto a model and producing them from
//! expert opinions.

use std::collections::BTreeMap;

use fcm_cad::fuzzy::{derive_weights, OpinionFile};
use fcm_cad::model::{ConceptDef, ConceptId, FieldIssue, Provenance, WeightEntry, WeightSetDef};
use fcm_cad::{CadModel, ValidationError, WeightSet};

fn find<'a>(concepts: &'a [ConceptDef], key: &str) -> Option<&'a ConceptDef> {
    let norm = key.trim().to_lowercase();
    if let Ok(id) = norm.parse::<ConceptId>() {
        return concepts.iter().find(|c| c.id == id);
    }
    concepts.iter().find(|c| c.key == norm || c.name.to_lowercase() == norm)
}

/// Weights from `def` where given, the model's baseline elsewhere.
pub fn overlay(model: &CadModel, def: &WeightSetDef) -> Result<WeightSet, ValidationError> {
    let mut merged: BTreeMap<ConceptId, f64> =
        model.baseline_weights().to_def().values.into_iter().map(|e| (e.concept, e.weight)).collect();
    let mut issues = Vec::new();
    let mut seen = BTreeMap::new();
    for e in &def.values {
        let field = e.concept.to_string();
        if !e.concept.is_input() {
            issues.push(FieldIssue { field, message: "the output concept has no weight".into() });
        } else if seen.insert(e.concept, ()).is_some() {
            issues.push(FieldIssue { field, message: "weight given more than once".into() });
        } else if !(-1.0..=1.0).contains(&e.weight) {
            issues.push(FieldIssue { field, message: format!("weight {} outside [-1, 1]", e.weight) });
        } else {
            merged.insert(e.concept, e.weight);
        }
    }
    if !issues.is_empty() {
        return Err(ValidationError { issues });
    }
    let full = WeightSetDef {
        provenance: def.provenance,
        values: merged.into_iter().map(|(concept, weight)| WeightEntry { concept, weight }).collect(),
    };
    WeightSet::from_def(&full).map_err(|e| ValidationError::single("weights", e))
}

/// Defuzzifies every interconnection in the opinion file. Keys may be
/// concept ids (`A29`), keys or clinical names. Concepts without opinions
/// keep their baseline weight.
pub fn defuzzify(model: &CadModel, opinions: &OpinionFile) -> Result<WeightSetDef, ValidationError> {
    let mut issues = Vec::new();
    let mut resolved = OpinionFile::new();
    for (key, entries) in opinions {
        match find(model.concepts(), key) {
            Some(c) if c.id.is_input() => {
                if resolved.insert(c.id.to_string(), entries.clone()).is_some() {
                    issues.push(FieldIssue { field: key.clone(), message: format!("{} given more than once", c.id) });
                }
            }
            Some(c) => issues.push(FieldIssue { field: key.clone(), message: format!("{} is the output", c.id) }),
            None => issues.push(FieldIssue { field: key.clone(), message: "unknown interconnection".into() }),
        }
    }
    if !issues.is_empty() {
        return Err(ValidationError { issues });
    }
    let derived = derive_weights::<f64>(&resolved).map_err(|(id, e)| ValidationError::single(id, e.to_string()))?;
    let def = WeightSetDef {
        provenance: Provenance::UserDefuzzified,
        values: derived
            .into_iter()
            .map(|(id, weight)| WeightEntry { concept: id.parse().expect("resolved id"), weight })
            .collect(),
    };
    Ok(overlay(model, &def)?.to_def())
}
