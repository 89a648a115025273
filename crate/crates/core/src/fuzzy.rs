//! Expert opinion aggregation and centre-of-gravity defuzzification.
//!
//! Each expert labels an interconnection with a signed linguistic grade.
//! The grades' membership functions over `[-1, 1]` are summed pointwise and
//! the centroid of the summed curve becomes the numeric weight.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Samples used for the aggregated curve.
pub const DEFAULT_GRID_SAMPLES: usize = 2001;

/// Half-width of the triangular grades.
const HALF_WIDTH: f64 = 0.15;
/// Foot of the saturating "highest possible" grade.
const SHOULDER_FOOT: f64 = 0.85;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("no expert opinions given")]
    EmptyOpinions,
    #[error("aggregated membership curve is identically zero")]
    DegenerateCurve,
    #[error("grid needs at least 2 samples, got {0}")]
    GridTooSmall(usize),
    #[error("unknown linguistic grade `{0}`")]
    UnknownGrade(String),
    #[error("unknown sign `{0}`")]
    UnknownSign(String),
    #[error("grade {0} requires a sign")]
    MissingSign(Grade),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grade {
    VeryWeak,
    Weak,
    Medium,
    Strong,
    VeryStrong,
    HighestPossible,
}

impl Grade {
    pub const ALL: [Grade; 6] =
        [Grade::VeryWeak, Grade::Weak, Grade::Medium, Grade::Strong, Grade::VeryStrong, Grade::HighestPossible];

    pub fn abbreviation(self) -> &'static str {
        match self {
            Grade::VeryWeak => "VW",
            Grade::Weak => "W",
            Grade::Medium => "M",
            Grade::Strong => "S",
            Grade::VeryStrong => "VS",
            Grade::HighestPossible => "THP",
        }
    }

    /// Center of the positive triangle; `None` for the shoulder grade.
    fn center(self) -> Option<f64> {
        match self {
            Grade::VeryWeak => Some(0.15),
            Grade::Weak => Some(0.30),
            Grade::Medium => Some(0.50),
            Grade::Strong => Some(0.65),
            Grade::VeryStrong => Some(0.85),
            Grade::HighestPossible => None,
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for Grade {
    type Err = FuzzyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Grade::ALL
            .into_iter()
            .find(|g| g.abbreviation().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FuzzyError::UnknownGrade(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    #[serde(alias = "+")]
    Positive,
    #[serde(alias = "-")]
    Negative,
}

impl Sign {
    fn flip(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

/// A signed grade, or the unsigned `ZERO` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinguisticTerm {
    Zero,
    Graded { grade: Grade, sign: Sign },
}

impl LinguisticTerm {
    pub fn positive(grade: Grade) -> Self {
        Self::Graded { grade, sign: Sign::Positive }
    }

    pub fn negative(grade: Grade) -> Self {
        Self::Graded { grade, sign: Sign::Negative }
    }

    pub fn mirrored(self) -> Self {
        match self {
            Self::Zero => Self::Zero,
            Self::Graded { grade, sign } => Self::Graded { grade, sign: sign.flip() },
        }
    }

    /// Parses `M`, `-M`, `(-)THP`, `+VS` or `0`/`ZERO`.
    pub fn parse(text: &str) -> Result<Self, FuzzyError> {
        let t = text.trim();
        if t == "0" || t.eq_ignore_ascii_case("zero") {
            return Ok(Self::Zero);
        }
        let (sign, rest) = if let Some(r) = t.strip_prefix("(-)").or_else(|| t.strip_prefix('-')) {
            (Sign::Negative, r)
        } else if let Some(r) = t.strip_prefix("(+)").or_else(|| t.strip_prefix('+')) {
            (Sign::Positive, r)
        } else {
            (Sign::Positive, t)
        };
        Ok(Self::Graded { grade: rest.parse()?, sign })
    }
}

impl fmt::Display for LinguisticTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("ZERO"),
            Self::Graded { grade, sign: Sign::Positive } => write!(f, "{grade}"),
            Self::Graded { grade, sign: Sign::Negative } => write!(f, "-{grade}"),
        }
    }
}

/// Wire form of a term: `{"grade": "VS", "sign": "negative"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub grade: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
}

impl TryFrom<&TermEntry> for LinguisticTerm {
    type Error = FuzzyError;

    fn try_from(entry: &TermEntry) -> Result<Self, Self::Error> {
        let g = entry.grade.trim();
        if g == "0" || g.eq_ignore_ascii_case("zero") {
            return Ok(Self::Zero);
        }
        let grade: Grade = g.parse()?;
        let sign = entry.sign.ok_or(FuzzyError::MissingSign(grade))?;
        Ok(Self::Graded { grade, sign })
    }
}

impl From<LinguisticTerm> for TermEntry {
    fn from(term: LinguisticTerm) -> Self {
        match term {
            LinguisticTerm::Zero => TermEntry { grade: "ZERO".into(), sign: None },
            LinguisticTerm::Graded { grade, sign } => {
                TermEntry { grade: grade.abbreviation().into(), sign: Some(sign) }
            }
        }
    }
}

/// Membership function over the universe `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipFunction<T> {
    Triangular { center: T, half_width: T },
    /// Ramp from `foot` (membership 0) to `peak` (membership 1), with `peak`
    /// on the boundary of the universe.
    Shoulder { foot: T, peak: T },
}

impl<T: Scalar> MembershipFunction<T> {
    pub fn eval(&self, x: T) -> T {
        match *self {
            Self::Triangular { center, half_width } => {
                let d = (x - center).abs();
                if d >= half_width {
                    T::zero()
                } else {
                    T::one() - d / half_width
                }
            }
            Self::Shoulder { foot, peak } => {
                let lo = foot.min(peak);
                let hi = foot.max(peak);
                if x < lo || x > hi {
                    T::zero()
                } else {
                    ((x - foot) / (peak - foot)).max(T::zero()).min(T::one())
                }
            }
        }
    }

    /// Closed-form centroid of the membership area.
    pub fn centroid(&self) -> T {
        match *self {
            Self::Triangular { center, .. } => center,
            // right triangle with vertices foot, peak, peak
            Self::Shoulder { foot, peak } => (foot + peak + peak) / T::lit(3.0),
        }
    }
}

/// The fixed membership function for a term.
pub fn membership_of<T: Scalar>(term: LinguisticTerm) -> MembershipFunction<T> {
    match term {
        LinguisticTerm::Zero => MembershipFunction::Triangular { center: T::zero(), half_width: T::lit(HALF_WIDTH) },
        LinguisticTerm::Graded { grade, sign } => {
            let s = sign.factor();
            match grade.center() {
                Some(c) => MembershipFunction::Triangular { center: T::lit(s * c), half_width: T::lit(HALF_WIDTH) },
                None => MembershipFunction::Shoulder { foot: T::lit(s * SHOULDER_FOOT), peak: T::lit(s) },
            }
        }
    }
}

/// Non-empty list of opinions on one interconnection, one per expert.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertOpinionSet {
    opinions: Vec<LinguisticTerm>,
}

impl ExpertOpinionSet {
    pub fn new(opinions: Vec<LinguisticTerm>) -> Result<Self, FuzzyError> {
        if opinions.is_empty() {
            return Err(FuzzyError::EmptyOpinions);
        }
        Ok(Self { opinions })
    }

    pub fn opinions(&self) -> &[LinguisticTerm] {
        &self.opinions
    }

    pub fn mirrored(&self) -> Self {
        Self { opinions: self.opinions.iter().map(|t| t.mirrored()).collect() }
    }
}

/// Pointwise sum of membership functions on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedCurve<T> {
    xs: Vec<T>,
    mu: Vec<T>,
}

impl<T: Scalar> AggregatedCurve<T> {
    pub fn xs(&self) -> &[T] {
        &self.xs
    }

    pub fn membership(&self) -> &[T] {
        &self.mu
    }
}

/// Uniform grid over `[-1, 1]`, exactly antisymmetric about zero.
fn grid<T: Scalar>(samples: usize) -> Vec<T> {
    let last = T::lit((samples - 1) as f64);
    (0..samples)
        .map(|k| (T::lit((2 * k) as f64) - last) / last)
        .collect()
}

pub fn aggregate<T: Scalar>(opinions: &ExpertOpinionSet) -> Result<AggregatedCurve<T>, FuzzyError> {
    aggregate_on(opinions, DEFAULT_GRID_SAMPLES)
}

pub fn aggregate_on<T: Scalar>(opinions: &ExpertOpinionSet, samples: usize) -> Result<AggregatedCurve<T>, FuzzyError> {
    if opinions.opinions.is_empty() {
        return Err(FuzzyError::EmptyOpinions);
    }
    if samples < 2 {
        return Err(FuzzyError::GridTooSmall(samples));
    }
    let xs = grid::<T>(samples);
    let fns: Vec<MembershipFunction<T>> = opinions.opinions.iter().map(|&t| membership_of(t)).collect();
    let mu = xs
        .iter()
        .map(|&x| fns.iter().fold(T::zero(), |acc, f| acc + f.eval(x)))
        .collect();
    Ok(AggregatedCurve { xs, mu })
}

/// Centre of gravity of the piecewise-linear curve through the samples.
///
/// Area uses the trapezoid rule; the first moment integrates `x * mu(x)`
/// exactly on each segment, so curves whose breakpoints fall on grid nodes
/// are handled without quadrature error.
pub fn defuzzify<T: Scalar>(curve: &AggregatedCurve<T>) -> Result<T, FuzzyError> {
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let mut area = T::zero();
    let mut moment = T::zero();
    for (xw, mw) in curve.xs.windows(2).zip(curve.mu.windows(2)) {
        let (x0, x1, m0, m1) = (xw[0], xw[1], mw[0], mw[1]);
        let h = x1 - x0;
        area = area + h * (m0 + m1) / two;
        moment = moment + h * (m0 * (two * x0 + x1) + m1 * (x0 + two * x1)) / six;
    }
    if !(area > T::zero()) {
        return Err(FuzzyError::DegenerateCurve);
    }
    Ok((moment / area).max(-T::one()).min(T::one()))
}

/// Aggregate then defuzzify.
pub fn derive_weight<T: Scalar>(opinions: &ExpertOpinionSet) -> Result<T, FuzzyError> {
    defuzzify(&aggregate::<T>(opinions)?)
}

/// Expert opinion file: interconnection id to the experts' terms.
pub type OpinionFile = BTreeMap<String, Vec<TermEntry>>;

/// Defuzzifies every interconnection of an opinion file.
pub fn derive_weights<T: Scalar>(file: &OpinionFile) -> Result<BTreeMap<String, T>, (String, FuzzyError)> {
    file.iter()
        .map(|(id, entries)| {
            let terms = entries
                .iter()
                .map(LinguisticTerm::try_from)
                .collect::<Result<Vec<_>, _>>()
                .and_then(ExpertOpinionSet::new)
                .and_then(|set| derive_weight::<T>(&set));
            terms.map(|w| (id.clone(), w)).map_err(|e| (id.clone(), e))
        })
        .collect()
}
