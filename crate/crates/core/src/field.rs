use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One finite real value per vertex (or per analytic sample point).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "field entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    /// Wraps values already known to be finite.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn zeros(len: usize) -> Self {
        Self::constant(len, 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index and value of the largest entry.
    pub fn argmax(&self) -> (usize, f64) {
        self.0
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Weighted inner product `sum_x f(x) g(x) w(x)`.
    pub fn dot_weighted(&self, other: &ScalarField, weights: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .zip(weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// `sum_x |f(x)| w(x)`.
    pub fn l1_norm(&self, weights: &[f64]) -> f64 {
        self.0.iter().zip(weights).map(|(a, w)| a.abs() * w).sum()
    }

    pub fn l2_norm(&self, weights: &[f64]) -> f64 {
        self.dot_weighted(self, weights).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

impl Deref for ScalarField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<ScalarField> for Vec<f64> {
    fn from(f: ScalarField) -> Self {
        f.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(ScalarField::new(vec![1.0, f64::NAN]).is_err());
        assert!(ScalarField::new(vec![f64::INFINITY]).is_err());
        assert!(ScalarField::new(vec![0.0, -2.5]).is_ok());
    }

    #[test]
    fn weighted_norms() {
        let f = ScalarField::new(vec![1.0, -2.0, 3.0]).unwrap();
        let w = [0.5, 0.25, 1.0];
        assert_eq!(f.l1_norm(&w), 0.5 + 0.5 + 3.0);
        assert_eq!(f.dot_weighted(&f, &w), 0.5 + 1.0 + 9.0);
        assert_eq!(f.sup_norm(), 3.0);
        assert_eq!(f.argmax(), (2, 3.0));
    }
}
