use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Linguistic output category for a normalized score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityBand {
    Zero,
    Small,
    Medium,
    Large,
    VeryLarge,
}

impl ProbabilityBand {
    pub const ALL: [ProbabilityBand; 5] = [
        ProbabilityBand::Zero,
        ProbabilityBand::Small,
        ProbabilityBand::Medium,
        ProbabilityBand::Large,
        ProbabilityBand::VeryLarge,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProbabilityBand::Zero => "Zero Probability",
            ProbabilityBand::Small => "Small Probability",
            ProbabilityBand::Medium => "Medium Probability",
            ProbabilityBand::Large => "Large Probability",
            ProbabilityBand::VeryLarge => "Very Large Probability",
        }
    }
}

impl fmt::Display for ProbabilityBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandBoundary {
    pub band: ProbabilityBand,
    pub lower: f64,
}

/// Lower-inclusive band boundaries partitioning `[-1, 1]`. The top band
/// also includes 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BandTable<T> {
    lowers: [T; 5],
}

impl<T: Scalar> BandTable<T> {
    pub fn new(boundaries: &[BandBoundary]) -> Result<Self, String> {
        if boundaries.len() != ProbabilityBand::ALL.len() {
            return Err(format!("expected {} band boundaries, got {}", ProbabilityBand::ALL.len(), boundaries.len()));
        }
        let mut lowers = [T::zero(); 5];
        for (i, (b, want)) in boundaries.iter().zip(ProbabilityBand::ALL).enumerate() {
            if b.band != want {
                return Err(format!("band {i} must be `{want:?}`, got `{:?}`", b.band));
            }
            if i == 0 && b.lower != -1.0 {
                return Err("the lowest band must start at -1".into());
            }
            if i > 0 && !(b.lower > boundaries[i - 1].lower && b.lower < 1.0) {
                return Err(format!("band lower bounds must increase strictly inside (-1, 1), got {}", b.lower));
            }
            lowers[i] = T::lit(b.lower);
        }
        Ok(Self { lowers })
    }

    pub fn boundaries(&self) -> Vec<BandBoundary> {
        ProbabilityBand::ALL
            .into_iter()
            .zip(self.lowers)
            .map(|(band, lower)| BandBoundary { band, lower: lower.as_f64() })
            .collect()
    }

    pub fn band_of(&self, v: T) -> Result<ProbabilityBand, String> {
        if !(v >= -T::one() && v <= T::one()) {
            return Err(format!("score {v} outside [-1, 1]"));
        }
        let idx = self.lowers.iter().rposition(|&lo| v >= lo).unwrap_or(0);
        Ok(ProbabilityBand::ALL[idx])
    }
}

impl<T: Scalar> Default for BandTable<T> {
    fn default() -> Self {
        Self { lowers: [-1.0, 0.0, 0.25, 0.5, 0.75].map(T::lit) }
    }
}
