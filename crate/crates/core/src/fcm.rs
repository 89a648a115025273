//! Fuzzy cognitive map mathematics.
//!
//! A map is a set of `N` concepts with values in `[-1, 1]` and a signed
//! weight matrix. Entry `(j, i)` of the matrix is the causal weight from
//! concept `j` to concept `i`. One update step computes, for every concept,
//!
//! ```text
//! v_i(t+1) = tanh( v_i(t) + sum_{j != i} v_j(t) * w_ji )
//! ```
//!
//! The diagonal is held at zero, so the self term enters only through the
//! memory term `v_i(t)`.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FcmError {
    #[error("squash input is not finite: {0}")]
    NonFinite(f64),
    #[error("concept value {value} at index {index} outside [-1, 1]")]
    StateOutOfRange { index: usize, value: f64 },
    #[error("weight {value} at ({from}, {to}) outside [-1, 1]")]
    WeightOutOfRange { from: usize, to: usize, value: f64 },
    #[error("self-loop weight {value} on concept {index}; the diagonal must be zero")]
    SelfLoop { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid convergence config: {0}")]
    InvalidConfig(&'static str),
}

/// The map's squashing function, `tanh`.
pub fn squash<T: Scalar>(x: T) -> Result<T, FcmError> {
    if !x.is_finite() {
        return Err(FcmError::NonFinite(x.as_f64()));
    }
    Ok(x.tanh())
}

/// Concept values of a map, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StateVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> StateVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, FcmError> {
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < -T::one() || v > T::one() {
                return Err(FcmError::StateOutOfRange { index, value: v.as_f64() });
            }
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![T::zero(); len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Option<T> {
        self.values.get(index).copied()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.values
    }

    /// Max-norm distance to another state of the same length.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    /// Whitespace separated decimal values, one line.
    pub fn to_text(&self) -> String {
        join_values(&self.values)
    }

    pub fn from_text(text: &str) -> Result<Self, FcmError> {
        Self::new(parse_values(text)?)
    }
}

/// Square matrix of causal weights. Row index is the source concept,
/// column index the target.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    size: usize,
    entries: Vec<T>,
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn zeros(size: usize) -> Self {
        Self { size, entries: vec![T::zero(); size * size] }
    }

    /// Builds a matrix from row-major entries (`entries[from * size + to]`).
    pub fn from_row_major(size: usize, entries: Vec<T>) -> Result<Self, FcmError> {
        if entries.len() != size * size {
            return Err(FcmError::DimensionMismatch { expected: size * size, actual: entries.len() });
        }
        let mut m = Self::zeros(size);
        for from in 0..size {
            for to in 0..size {
                m.set(from, to, entries[from * size + to])?;
            }
        }
        Ok(m)
    }

    /// Star topology: every input concept points at a single output concept
    /// placed last. The matrix has `weights.len() + 1` concepts.
    pub fn star(weights: &[T]) -> Result<Self, FcmError> {
        let output = weights.len();
        let mut m = Self::zeros(output + 1);
        for (from, &w) in weights.iter().enumerate() {
            m.set(from, output, w)?;
        }
        Ok(m)
    }

    /// Sets the weight from `from` to `to`. A non-zero diagonal entry is
    /// rejected.
    pub fn set(&mut self, from: usize, to: usize, weight: T) -> Result<(), FcmError> {
        if from >= self.size || to >= self.size {
            return Err(FcmError::DimensionMismatch { expected: self.size, actual: from.max(to) + 1 });
        }
        if !weight.is_finite() || weight < -T::one() || weight > T::one() {
            return Err(FcmError::WeightOutOfRange { from, to, value: weight.as_f64() });
        }
        if from == to && weight != T::zero() {
            return Err(FcmError::SelfLoop { index: from, value: weight.as_f64() });
        }
        self.entries[from * self.size + to] = weight;
        Ok(())
    }

    pub fn get(&self, from: usize, to: usize) -> T {
        self.entries[from * self.size + to]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// One line per source concept, whitespace separated.
    pub fn to_text(&self) -> String {
        self.entries
            .chunks(self.size.max(1))
            .map(join_values)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn from_text(text: &str) -> Result<Self, FcmError> {
        let rows: Vec<Vec<T>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(parse_values)
            .collect::<Result<_, _>>()?;
        let size = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != size) {
            return Err(FcmError::DimensionMismatch { expected: size, actual: bad.len() });
        }
        Self::from_row_major(size, rows.into_iter().flatten().collect())
    }
}

fn join_values<T: Scalar>(values: &[T]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

fn parse_values<T: Scalar>(line: &str) -> Result<Vec<T>, FcmError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map(T::lit)
                .map_err(|_| FcmError::NonFinite(f64::NAN))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceConfig<T> {
    /// Max-norm residual below which the iteration is converged.
    pub epsilon: T,
    pub max_iterations: usize,
    /// Number of past states checked for a repeat.
    pub cycle_window: usize,
}

impl<T: Scalar> Default for ConvergenceConfig<T> {
    fn default() -> Self {
        Self { epsilon: T::lit(1e-5), max_iterations: 100, cycle_window: 8 }
    }
}

impl<T: Scalar> ConvergenceConfig<T> {
    pub fn validate(&self) -> Result<(), FcmError> {
        if !(self.epsilon > T::zero()) {
            return Err(FcmError::InvalidConfig("epsilon must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(FcmError::InvalidConfig("max_iterations must be at least 1"));
        }
        if self.cycle_window < 2 {
            return Err(FcmError::InvalidConfig("cycle_window must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceStatus {
    Converged,
    LimitCycle,
    MaxIterationsReached,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferenceResult<T> {
    pub final_state: StateVector<T>,
    pub status: InferenceStatus,
    pub iterations: usize,
    pub residual: T,
}

/// One synchronous update of every concept.
pub fn step<T: Scalar>(state: &StateVector<T>, weights: &WeightMatrix<T>) -> Result<StateVector<T>, FcmError> {
    step_clamped(state, weights, &[])
}

/// Like [`step`], but concepts listed in `clamped` keep their current value.
pub fn step_clamped<T: Scalar>(
    state: &StateVector<T>,
    weights: &WeightMatrix<T>,
    clamped: &[usize],
) -> Result<StateVector<T>, FcmError> {
    let n = weights.size();
    if state.len() != n {
        return Err(FcmError::DimensionMismatch { expected: n, actual: state.len() });
    }
    let v = state.values();
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        if clamped.contains(&i) {
            next.push(v[i]);
            continue;
        }
        // diagonal is zero, so summing over all j equals the j != i sum
        let incoming = (0..n).fold(T::zero(), |acc, j| acc + v[j] * weights.get(j, i));
        next.push(squash(v[i] + incoming)?);
    }
    Ok(StateVector { values: next })
}

/// Iterates [`step`] until the state settles, repeats, or the iteration
/// budget runs out.
pub fn run_to_fixed_point<T: Scalar>(
    initial: &StateVector<T>,
    weights: &WeightMatrix<T>,
    config: &ConvergenceConfig<T>,
) -> Result<InferenceResult<T>, FcmError> {
    run_clamped(initial, weights, &[], config)
}

/// Fixed-point iteration with the listed concepts held at their initial
/// values. Clamping the inputs of a star map keeps the evidence constant
/// while the output settles.
pub fn run_clamped<T: Scalar>(
    initial: &StateVector<T>,
    weights: &WeightMatrix<T>,
    clamped: &[usize],
    config: &ConvergenceConfig<T>,
) -> Result<InferenceResult<T>, FcmError> {
    config.validate()?;
    if initial.len() != weights.size() {
        return Err(FcmError::DimensionMismatch { expected: weights.size(), actual: initial.len() });
    }
    let mut history: Vec<StateVector<T>> = Vec::with_capacity(config.cycle_window);
    let mut current = initial.clone();
    let mut residual = T::zero();
    for iteration in 1..=config.max_iterations {
        let next = step_clamped(&current, weights, clamped)?;
        residual = next.max_abs_diff(&current);
        if residual < config.epsilon {
            return Ok(InferenceResult { final_state: next, status: InferenceStatus::Converged, iterations: iteration, residual });
        }
        // lag >= 2 only; a repeat of the immediate predecessor is convergence
        if history.iter().any(|past| next.max_abs_diff(past) < config.epsilon) {
            return Ok(InferenceResult { final_state: next, status: InferenceStatus::LimitCycle, iterations: iteration, residual });
        }
        if history.len() == config.cycle_window {
            history.remove(0);
        }
        history.push(current);
        current = next;
    }
    Ok(InferenceResult { final_state: current, status: InferenceStatus::MaxIterationsReached, iterations: config.max_iterations, residual })
}

/// Un-squashed weighted sum of input values, summed left to right.
pub fn single_pass_score<T: Scalar>(inputs: &[T], weights: &[T]) -> Result<T, FcmError> {
    if inputs.len() != weights.len() {
        return Err(FcmError::DimensionMismatch { expected: weights.len(), actual: inputs.len() });
    }
    Ok(inputs.iter().zip(weights).fold(T::zero(), |acc, (&v, &w)| acc + v * w))
}
