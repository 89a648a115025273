//! Labeled datasets and their CSV form.
//!
//! One header row naming attributes (concept keys, ids or clinical names,
//! plus `case_id`, `label` and optionally `age`), one row per patient. Cells
//! use the clinical vocabulary; an empty cell means the attribute is absent,
//! which for diagnostic tests means the test was not performed.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::model::{ConceptDef, ConceptKind, FieldIssue, Label, PatientInput, PatientRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetProvenance {
    Ingested { source: String },
    Synthetic { seed: u64, note: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based line number in the file, header included.
    pub line: usize,
    pub case_id: Option<String>,
    pub issues: Vec<FieldIssue>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset has no records")]
    Empty,
    #[error("{} invalid row(s); first at line {}: {}", .0.len(), .0[0].line, describe(&.0[0]))]
    Rows(Vec<RowError>),
}

fn describe(row: &RowError) -> String {
    row.issues.iter().map(|i| format!("{}: {}", i.field, i.message)).collect::<Vec<_>>().join("; ")
}

/// Patient records that all carry a ground-truth label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    records: Vec<PatientRecord>,
    provenance: DatasetProvenance,
}

impl LabeledDataset {
    /// Fails with the offending row index if a record has no label.
    pub fn new(records: Vec<PatientRecord>, provenance: DatasetProvenance) -> Result<Self, usize> {
        match records.iter().position(|r| r.label.is_none()) {
            Some(i) => Err(i),
            None => Ok(Self { records, provenance }),
        }
    }

    pub fn records(&self) -> &[PatientRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &DatasetProvenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.records.iter().map(|r| r.label.expect("labeled dataset"))
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels().filter(|&l| l == label).count()
    }
}

pub fn load_dataset(path: impl AsRef<Path>, concepts: &[ConceptDef]) -> Result<LabeledDataset, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_dataset(file, concepts, &path.display().to_string())
}

/// Parses CSV text, validating every row and collecting all row errors.
pub fn read_dataset<R: Read>(reader: R, concepts: &[ConceptDef], source: &str) -> Result<LabeledDataset, DatasetError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let input: PatientInput = headers.iter().zip(row.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect();
        match crate::model::parse_patient(concepts, &input) {
            Ok(record) if record.label.is_none() => errors.push(RowError {
                line,
                case_id: record.id.clone(),
                issues: vec![FieldIssue { field: "label".into(), message: "missing ground-truth label".into() }],
            }),
            Ok(record) => records.push(record),
            Err(e) => errors.push(RowError {
                line,
                case_id: input.iter().find(|(k, _)| *k == "case_id" || *k == "id").map(|(_, v)| v.to_string()),
                issues: e.issues,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(DatasetError::Rows(errors));
    }
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(LabeledDataset { records, provenance: DatasetProvenance::Ingested { source: source.to_string() } })
}

/// Writes the dataset with one column per input concept key.
pub fn write_dataset<W: Write>(writer: W, dataset: &LabeledDataset, concepts: &[ConceptDef]) -> Result<(), DatasetError> {
    let inputs: Vec<&ConceptDef> = concepts.iter().filter(|c| c.id.is_input()).collect();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["case_id", "label"];
    header.extend(inputs.iter().map(|c| c.key.as_str()));
    w.write_record(&header)?;
    for (i, r) in dataset.records.iter().enumerate() {
        let id = r.id.clone().unwrap_or_else(|| format!("{}", i + 1));
        let mut row = vec![id, r.label.map(|l| l.as_str().to_string()).unwrap_or_default()];
        for c in &inputs {
            let s = r.stage(c.id);
            row.push(if s.is_present() {
                s.as_str().to_string()
            } else if c.kind == ConceptKind::DiagnosticTest {
                String::new()
            } else {
                "no".to_string()
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
