//! Reference implementations used to check the library from the outside.
//! None of them call into the crate's numeric code.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{Float, One, ToPrimitive, Zero};
use rand::Rng;

use fcm_cad::model::{ConceptId, PatientRecord, Stage};
use fcm_cad::CadModel;

const FRAC_BITS: u32 = 256;
/// exp(y) is evaluated as exp(y / 2^REDUCTION)^(2^REDUCTION).
const REDUCTION: u32 = 16;

/// Exact fixed-point image of a finite double, truncated below 2^-256.
fn to_fixed(x: f64) -> BigInt {
    let (mantissa, exponent, sign) = Float::integer_decode(x);
    let m = BigInt::from(mantissa) * BigInt::from(sign);
    let shift = exponent as i32 + FRAC_BITS as i32;
    if shift >= 0 {
        m << shift as u32
    } else {
        m >> (-shift) as u32
    }
}

fn fixed_mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FRAC_BITS
}

fn fixed_div(a: &BigInt, b: &BigInt) -> BigInt {
    (a << FRAC_BITS) / b
}

fn fixed_one() -> BigInt {
    BigInt::one() << FRAC_BITS
}

/// exp of a non-negative fixed-point number by Taylor series after argument
/// reduction, then repeated squaring.
fn fixed_exp(y: &BigInt) -> BigInt {
    let r = y >> REDUCTION;
    let mut term = fixed_one();
    let mut sum = fixed_one();
    let mut n = 1u32;
    loop {
        term = fixed_mul(&term, &r) / n;
        if term.is_zero() {
            break;
        }
        sum += &term;
        n += 1;
    }
    for _ in 0..REDUCTION {
        sum = fixed_mul(&sum, &sum);
    }
    sum
}

/// tanh computed with 256 fractional bits and rounded to the nearest double.
pub fn tanh_oracle(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let e = fixed_exp(&to_fixed(2.0 * x.abs()));
    let one = fixed_one();
    let t = fixed_div(&(&e - &one), &(&e + &one));
    let v = t.to_f64().expect("finite") / 2f64.powi(FRAC_BITS as i32);
    v.copysign(x)
}

/// Root of `v = tanh(v + s)` by bisection. The map `v - tanh(v + s)` is
/// non-decreasing, so the root is unique and lies in [-1, 1].
pub fn star_fixed_point(s: f64) -> f64 {
    let f = |v: f64| v - (v + s).tanh();
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Table of input weights, typed in independently of the bundled model.
pub const BASELINE: [f64; 30] = [
    0.35, 0.2, 0.25, -0.35, 0.3, -0.5, -0.75, -0.25, 0.1, 0.4, 0.35, 0.1, 0.1, 0.1, 0.1, 0.15, 0.2, 0.1, 0.4, 0.15,
    -0.4, 0.35, -0.35, 0.42, -0.75, 0.6, -0.44, 0.625, -0.85, 0.7,
];

/// Concept numbers of which at most one may be active.
pub const GROUPS: [&[usize]; 8] =
    [&[1, 2, 3, 4], &[5, 6], &[7, 8, 9, 10], &[21, 22], &[23, 24], &[25, 26], &[27, 28], &[29, 30]];

fn grouped(n: usize) -> bool {
    GROUPS.iter().any(|g| g.contains(&n))
}

/// Extremes of the raw score under binary encodings, by enumerating every
/// admissible activation pattern of each group and every ungrouped concept.
pub fn bounds_oracle(weights: &[f64; 30]) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for group in GROUPS {
        // none active, or exactly one member active
        let patterns = std::iter::once(0.0).chain(group.iter().map(|&n| weights[n - 1]));
        let (gmin, gmax) = patterns.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        lo += gmin;
        hi += gmax;
    }
    for n in (1..=30).filter(|&n| !grouped(n)) {
        lo += weights[n - 1].min(0.0);
        hi += weights[n - 1].max(0.0);
    }
    (lo, hi)
}

/// Recommended threshold and its Youden index, counting with binary search
/// over sorted scores. Ties go to the higher sensitivity, then to the
/// earlier grid point. `None` when either class is absent.
pub fn youden_oracle(scores: &[(f64, bool)], grid: &[f64]) -> Option<(f64, f64)> {
    let mut pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let mut neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let (p, n) = (pos.len() as i128, neg.len() as i128);
    let mut best: Option<(f64, i128, i128)> = None;
    for &t in grid {
        let tp = pos.len() - pos.partition_point(|&s| s < t);
        let tn = neg.partition_point(|&s| s < t);
        let scaled = tp as i128 * n + tn as i128 * p - p * n;
        let better = match best {
            None => true,
            Some((_, bj, btp)) => scaled > bj || (scaled == bj && tp as i128 > btp),
        };
        if better {
            best = Some((t, scaled, tp as i128));
        }
    }
    best.map(|(t, j, _)| (t, j as f64 / (p * n) as f64))
}

/// Uniformly chosen admissible value (including absence) for every concept,
/// with at most one active member per exclusivity group.
pub fn random_record<R: Rng>(rng: &mut R, model: &CadModel) -> PatientRecord {
    let mut record = PatientRecord::empty();
    let choose = |rng: &mut R, id: ConceptId, record: &mut PatientRecord| {
        let values: Vec<Stage> = model.concept(id).present_values().collect();
        record.set_stage(id, values[rng.gen_range(0..values.len())]);
    };
    for group in GROUPS {
        let pick = rng.gen_range(0..=group.len());
        if pick > 0 {
            choose(rng, ConceptId::new(group[pick - 1]).unwrap(), &mut record);
        }
    }
    for n in (1..=30).filter(|&n| !grouped(n)) {
        if rng.gen_bool(0.5) {
            choose(rng, ConceptId::new(n).unwrap(), &mut record);
        }
    }
    record
}

/// Same shape as [`random_record`] but every active concept is `yes`, the
/// strongest value, or its definite form, so each concept encodes as 0 or 1.
pub fn random_binary_record<R: Rng>(rng: &mut R, model: &CadModel) -> PatientRecord {
    let mut record = random_record(rng, model);
    for id in ConceptId::inputs() {
        if record.stage(id).is_present() {
            let strongest = model
                .concept(id)
                .present_values()
                .max_by(|a, b| model.stage_value(*a).total_cmp(&model.stage_value(*b)))
                .unwrap();
            record.set_stage(id, strongest);
        }
    }
    record
}
