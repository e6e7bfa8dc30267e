//! Parameter points and perturbation directions.

use std::ops::{Deref, Index};

use crate::error::{Error, Result};

/// A point in parameter space. All components are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteParameter { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn distance(&self, other: &ParameterVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// In-place `self -= step * direction`; fails if the result is not finite.
    pub(crate) fn descend(&mut self, step: f64, direction: &[f64]) -> Result<()> {
        for (x, d) in self.0.iter_mut().zip(direction) {
            *x -= step * d;
        }
        match self.0.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFiniteParameter { index }),
            None => Ok(()),
        }
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ParameterVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for ParameterVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// A simultaneous perturbation direction with every component equal to ±1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PerturbationVector(Vec<i8>);

impl PerturbationVector {
    /// Returns `None` if any sign is not exactly ±1.
    pub fn from_signs(signs: Vec<i8>) -> Option<Self> {
        signs
            .iter()
            .all(|s| *s == 1 || *s == -1)
            .then_some(Self(signs))
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }

    /// Every ±1 sign pattern of length `dim`, in binary counting order.
    pub fn enumerate(dim: usize) -> impl Iterator<Item = PerturbationVector> {
        (0..1u64 << dim).map(move |bits| {
            Self(
                (0..dim)
                    .map(|j| if bits >> j & 1 == 1 { -1 } else { 1 })
                    .collect(),
            )
        })
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            ParameterVector::new(vec![0.0, f64::NAN]),
            Err(Error::NonFiniteParameter { index: 1 })
        ));
        assert!(ParameterVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn perturbation_signs_only() {
        assert!(PerturbationVector::from_signs(vec![1, -1]).is_some());
        assert!(PerturbationVector::from_signs(vec![1, 0]).is_none());
    }

    #[test]
    fn enumerate_covers_all_patterns() {
        let all: Vec<_> = PerturbationVector::enumerate(3).collect();
        assert_eq!(all.len(), 8);
        let unique: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(unique.len(), 8);
    }
}
