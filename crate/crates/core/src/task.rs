//! Task-space points (object pose changes) and the weighted norm on them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{Error, Result};
use crate::math;

/// A point in task space: translation (m) and orientation (rad) of an
/// object pose change, or of a fixture base-pose offset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct TaskVector(Vec<f64>);

impl TaskVector {
    pub fn new(coords: Vec<f64>) -> Self {
        TaskVector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        TaskVector(vec![0.0; dim])
    }

    /// Planar pose change `(tx, ty, theta)`.
    pub fn planar(tx: f64, ty: f64, theta: f64) -> Self {
        TaskVector(vec![tx, ty, theta])
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

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "task vector has dimension {}, expected {dim}",
                self.dim()
            )))
        }
    }

    /// `self + t (other - self)`.
    pub fn lerp(&self, other: &TaskVector, t: f64) -> TaskVector {
        TaskVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }

    pub fn sub(&self, other: &TaskVector) -> TaskVector {
        TaskVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &TaskVector) -> TaskVector {
        TaskVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Index<usize> for TaskVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for TaskVector {
    fn from(v: Vec<f64>) -> Self {
        TaskVector(v)
    }
}

/// Diagonal weighting `W` of the squared task-space norm.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskMetric {
    weights: Vec<f64>,
}

impl TaskMetric {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("metric.weights", "at least one weight is required"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::config("metric.weights", "weights must be positive and finite"));
        }
        Ok(TaskMetric { weights })
    }

    /// `W = diag(w_t, w_t, w_r)` over `(tx, ty, theta)`.
    pub fn planar(w_t: f64, w_r: f64) -> Result<Self> {
        Self::new(vec![w_t, w_t, w_r])
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TaskMetric {
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    /// `‖a − b‖²_W`.
    pub fn dist_sq(&self, a: &TaskVector, b: &TaskVector) -> f64 {
        debug_assert_eq!(a.dim(), self.dim());
        debug_assert_eq!(b.dim(), self.dim());
        self.weights
            .iter()
            .zip(a.as_slice().iter().zip(b.as_slice()))
            .map(|(w, (x, y))| w * (x - y) * (x - y))
            .sum()
    }

    pub fn dist(&self, a: &TaskVector, b: &TaskVector) -> f64 {
        math::sqrt(self.dist_sq(a, b))
    }
}
