//! Seeded synthetic cohorts shaped like a 303-patient angiography series.
//!
//! Attribute probabilities are conditioned on the label so that diseased
//! cases lean toward abnormal tests, older age and more risk factors. They
//! are illustrative only and carry no clinical validity.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{DatasetProvenance, LabeledDataset};
use crate::model::{ConceptId, Label, PatientRecord, Stage};

pub const SYNTHETIC_NOTE: &str =
    "synthetic cohort from label-conditioned attribute probabilities; not clinically realistic";

/// Probability pair: (diseased, healthy).
type Pair = (f64, f64);

/// Symptom presentation: none, A1..A4.
const SYMPTOMS: [Pair; 5] = [(0.10, 0.10), (0.35, 0.25), (0.15, 0.30), (0.25, 0.15), (0.15, 0.20)];
const MALE: Pair = (0.92, 0.80);
/// Age bands A7..A10.
const AGE_BANDS: [Pair; 4] = [(0.03, 0.12), (0.15, 0.25), (0.32, 0.33), (0.50, 0.30)];

/// Binary history factors: (concept number, probabilities).
const HISTORY: [(usize, Pair); 8] = [
    (11, (0.35, 0.10)),
    (12, (0.08, 0.04)),
    (13, (0.12, 0.04)),
    (15, (0.60, 0.45)),
    (16, (0.60, 0.45)),
    (18, (0.35, 0.25)),
    (19, (0.30, 0.15)),
    (20, (0.08, 0.03)),
];
/// Smoking yes / occasionally.
const SMOKING: [Pair; 2] = [(0.40, 0.25), (0.10, 0.10)];
/// Obesity yes / relatively.
const OBESITY: [Pair; 2] = [(0.25, 0.15), (0.20, 0.20)];

struct TestProfile {
    normal: usize,
    abnormal: usize,
    performed: f64,
    /// Given performed: normal, partial finding, abnormal, definitely abnormal.
    outcome: [Pair; 4],
}

const TESTS: [TestProfile; 5] = [
    // ECG has no staging beyond normal/abnormal
    TestProfile { normal: 21, abnormal: 22, performed: 0.95, outcome: [(0.40, 0.70), (0.0, 0.0), (0.60, 0.30), (0.0, 0.0)] },
    TestProfile { normal: 23, abnormal: 24, performed: 0.60, outcome: [(0.30, 0.65), (0.20, 0.15), (0.35, 0.15), (0.15, 0.05)] },
    TestProfile { normal: 25, abnormal: 26, performed: 0.35, outcome: [(0.25, 0.65), (0.0, 0.0), (0.55, 0.30), (0.20, 0.05)] },
    TestProfile { normal: 27, abnormal: 28, performed: 0.20, outcome: [(0.25, 0.65), (0.20, 0.15), (0.35, 0.15), (0.20, 0.05)] },
    TestProfile { normal: 29, abnormal: 30, performed: 0.80, outcome: [(0.25, 0.65), (0.20, 0.15), (0.35, 0.15), (0.20, 0.05)] },
];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SyntheticError {
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("diseased fraction {0} outside [0, 1]")]
    Fraction(f64),
}

fn pick(p: Pair, label: Label) -> f64 {
    match label {
        Label::Diseased => p.0,
        Label::Healthy => p.1,
    }
}

/// Index drawn from a complete categorical distribution. Rounding slack
/// falls to the last index with positive weight.
fn categorical<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Listed probabilities plus the remainder as a final category.
fn with_remainder(listed: &[Pair], label: Label) -> Vec<f64> {
    let mut w: Vec<f64> = listed.iter().map(|&p| pick(p, label)).collect();
    w.push((1.0 - w.iter().sum::<f64>()).max(0.0));
    w
}

fn distribution(listed: &[Pair], label: Label) -> Vec<f64> {
    listed.iter().map(|&p| pick(p, label)).collect()
}

fn cid(n: usize) -> ConceptId {
    ConceptId::new(n).expect("concept number")
}

fn sample_record<R: Rng>(rng: &mut R, label: Label, index: usize) -> PatientRecord {
    let mut r = PatientRecord::empty();
    r.id = Some(format!("SYN-{:04}", index + 1));
    r.label = Some(label);

    let symptom = categorical(rng, &distribution(&SYMPTOMS, label));
    if (1..=4).contains(&symptom) {
        r.set_stage(cid(symptom), Stage::Yes);
    }
    let male = rng.gen_bool(pick(MALE, label));
    r.set_stage(cid(if male { 5 } else { 6 }), Stage::Yes);
    let band = categorical(rng, &distribution(&AGE_BANDS, label));
    r.set_stage(cid(7 + band), Stage::Yes);

    for (n, p) in HISTORY {
        if rng.gen_bool(pick(p, label)) {
            r.set_stage(cid(n), Stage::Yes);
        }
    }
    match categorical(rng, &with_remainder(&SMOKING, label)) {
        0 => r.set_stage(cid(14), Stage::Yes),
        1 => r.set_stage(cid(14), Stage::Occasionally),
        _ => {}
    }
    match categorical(rng, &with_remainder(&OBESITY, label)) {
        0 => r.set_stage(cid(17), Stage::Yes),
        1 => r.set_stage(cid(17), Stage::Relatively),
        _ => {}
    }

    for t in &TESTS {
        if !rng.gen_bool(t.performed) {
            continue;
        }
        let partial = match t.abnormal {
            28 => Stage::Doubtful,
            _ => Stage::Little,
        };
        // ECG findings are recorded as a plain yes
        let (abnormal, definite) = match t.abnormal {
            22 => (Stage::Yes, Stage::Yes),
            _ => (Stage::Abnormal, Stage::DefinitelyAbnormal),
        };
        match categorical(rng, &distribution(&t.outcome, label)) {
            0 => r.set_stage(cid(t.normal), Stage::Yes),
            1 => r.set_stage(cid(t.abnormal), partial),
            2 => r.set_stage(cid(t.abnormal), abnormal),
            _ => r.set_stage(cid(t.abnormal), definite),
        }
    }
    r
}

/// Deterministic for a given `(count, diseased_fraction, seed)`.
pub fn generate_synthetic(count: usize, diseased_fraction: f64, seed: u64) -> Result<LabeledDataset, SyntheticError> {
    if count == 0 {
        return Err(SyntheticError::ZeroCount);
    }
    if !(0.0..=1.0).contains(&diseased_fraction) {
        return Err(SyntheticError::Fraction(diseased_fraction));
    }
    let diseased = (count as f64 * diseased_fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<Label> = (0..count).map(|i| if i < diseased { Label::Diseased } else { Label::Healthy }).collect();
    labels.shuffle(&mut rng);
    let records = labels.into_iter().enumerate().map(|(i, l)| sample_record(&mut rng, l, i)).collect();
    Ok(LabeledDataset::new(records, DatasetProvenance::Synthetic { seed, note: SYNTHETIC_NOTE.into() })
        .expect("every synthetic record is labeled"))
}
