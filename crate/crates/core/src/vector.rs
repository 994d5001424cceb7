use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense parameter-shaped vector: iterates, gradients and moment estimates
/// all share this representation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(d: usize) -> Self {
        ParamVector(vec![0.0; d])
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize) -> f64) -> Self {
        ParamVector((0..d).map(f).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Index of the first non-finite element, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.0.iter().position(|v| !v.is_finite())
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        match self.first_non_finite() {
            Some(coordinate) => Err(Error::NonFinite {
                coordinate,
                context,
            }),
            None => Ok(()),
        }
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::Shape {
                expected,
                got: self.dim(),
            })
        }
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        ParamVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        ParamVector(v.to_vec())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}
