//! State spaces, weight functions, signed measures, and the two weighted
//! norms used throughout the crate.
//!
//! A weight `f >= 1` induces a norm on functions, `sup_x |g(x)| / f(x)`, and
//! a norm on signed measures, `sup { |mu(g)| : |g| <= f }`. On a finite space
//! the measure norm has the closed form `sum_x f(x) |mu(x)|`, which is what
//! [`f_norm_of_measure`] evaluates; the brute-force supremum over sign
//! patterns is kept as a test oracle.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("state space must have at least one state")]
    EmptySpace,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("weight must be >= 1 everywhere, found {value} at state {index}")]
    WeightBelowOne { index: usize, value: f64 },
    #[error("weight entries must be finite, found {value} at state {index}")]
    NonFiniteWeight { index: usize, value: f64 },
    #[error("duplicate state label {label:?}")]
    DuplicateLabel { label: String },
    #[error("state index {index} out of range for {n} states")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("table entry must be nonnegative, found {value} at state {index}")]
    NegativeEntry { index: usize, value: f64 },
}

/// A finite state space with optional display labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteStateSpace {
    n: usize,
    labels: Option<Vec<String>>,
}

impl FiniteStateSpace {
    pub fn new(n: usize) -> Result<Self, MeasureError> {
        if n == 0 {
            return Err(MeasureError::EmptySpace);
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(n: usize, labels: Vec<String>) -> Result<Self, MeasureError> {
        if n == 0 {
            return Err(MeasureError::EmptySpace);
        }
        if labels.len() != n {
            return Err(MeasureError::LengthMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for label in &labels {
            if !seen.insert(label.clone()) {
                return Err(MeasureError::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        Ok(Self {
            n,
            labels: Some(labels),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Display name for state `i`: the label if one was given, else the index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(labels) if i < labels.len() => labels[i].clone(),
            _ => i.to_string(),
        }
    }
}

/// A tabulated weight function `f: {0..n-1} -> [1, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    values: Vec<f64>,
}

impl Weight {
    pub fn new(values: Vec<f64>) -> Result<Self, MeasureError> {
        if values.is_empty() {
            return Err(MeasureError::EmptySpace);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(MeasureError::NonFiniteWeight { index: i, value: v });
            }
            if v < 1.0 {
                return Err(MeasureError::WeightBelowOne { index: i, value: v });
            }
        }
        Ok(Self { values })
    }

    /// The constant weight `f == 1`, which recovers total variation.
    pub fn ones(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// A signed measure on a finite state space, stored as a dense mass table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    mass: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(mass: Vec<f64>) -> Self {
        Self { mass }
    }

    /// Point mass at state `x`.
    pub fn dirac(x: usize, n: usize) -> Result<Self, MeasureError> {
        if x >= n {
            return Err(MeasureError::IndexOutOfRange { index: x, n });
        }
        let mut mass = vec![0.0; n];
        mass[x] = 1.0;
        Ok(Self { mass })
    }

    /// The difference `lhs - rhs` of two mass tables of equal length.
    pub fn difference(lhs: &[f64], rhs: &[f64]) -> Result<Self, MeasureError> {
        if lhs.len() != rhs.len() {
            return Err(MeasureError::LengthMismatch {
                expected: lhs.len(),
                got: rhs.len(),
            });
        }
        Ok(Self {
            mass: lhs.iter().zip(rhs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Integral `mu(g)` of a function table against the measure.
    pub fn integrate(&self, g: &[f64]) -> Result<f64, MeasureError> {
        if g.len() != self.mass.len() {
            return Err(MeasureError::LengthMismatch {
                expected: self.mass.len(),
                got: g.len(),
            });
        }
        Ok(self.mass.iter().zip(g).map(|(m, v)| m * v).sum())
    }

    /// Minimal decomposition `mu = mu_plus - mu_minus` with disjoint supports.
    pub fn jordan(&self) -> (SignedMeasure, SignedMeasure) {
        let plus: Vec<f64> = self
            .mass
            .iter()
            .map(|&v| if v > 0.0 { v } else { 0.0 })
            .collect();
        let minus: Vec<f64> = self
            .mass
            .iter()
            .map(|&v| if v < 0.0 { -v } else { 0.0 })
            .collect();
        (SignedMeasure::new(plus), SignedMeasure::new(minus))
    }

    /// `sum_x w(x) |mu(x)|` for a nonnegative weight table. This equals the
    /// supremum of `|mu(g)|` over all `g` with `|g| <= w`.
    pub fn weighted_norm(&self, w: &[f64]) -> Result<f64, MeasureError> {
        if w.len() != self.mass.len() {
            return Err(MeasureError::LengthMismatch {
                expected: self.mass.len(),
                got: w.len(),
            });
        }
        for (i, &v) in w.iter().enumerate() {
            if v < 0.0 {
                return Err(MeasureError::NegativeEntry { index: i, value: v });
            }
        }
        Ok(self
            .mass
            .iter()
            .zip(w)
            .map(|(m, f)| f * m.abs())
            .sum())
    }

    pub fn f_norm(&self, f: &Weight) -> Result<f64, MeasureError> {
        self.weighted_norm(f.values())
    }

    /// `sum_x |mu(x)|`, the f-norm with `f == 1`.
    pub fn total_variation(&self) -> f64 {
        self.mass.iter().map(|m| m.abs()).sum()
    }
}

/// `sup_x |g(x)| / f(x)` over the finite state space.
pub fn f_norm_of_function(g: &[f64], f: &Weight) -> Result<f64, MeasureError> {
    if g.len() != f.len() {
        return Err(MeasureError::LengthMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    Ok(g.iter()
        .zip(f.values())
        .map(|(gv, fv)| gv.abs() / fv)
        .fold(0.0, f64::max))
}

/// `sum_x f(x) |mu(x)|`, the weighted norm on signed measures.
pub fn f_norm_of_measure(mu: &SignedMeasure, f: &Weight) -> Result<f64, MeasureError> {
    mu.f_norm(f)
}

pub fn jordan_decompose(mu: &SignedMeasure) -> (SignedMeasure, SignedMeasure) {
    mu.jordan()
}

/// A subset of a finite state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSet {
    indices: BTreeSet<usize>,
    n: usize,
}

impl StateSet {
    pub fn new(indices: impl IntoIterator<Item = usize>, n: usize) -> Result<Self, MeasureError> {
        let indices: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(&max) = indices.iter().next_back() {
            if max >= n {
                return Err(MeasureError::IndexOutOfRange { index: max, n });
            }
        }
        Ok(Self { indices, n })
    }

    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.n).filter(|i| !self.contains(*i)).collect()
    }

    /// The indicator table `1_A`.
    pub fn indicator(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| if self.contains(i) { 1.0 } else { 0.0 })
            .collect()
    }
}
