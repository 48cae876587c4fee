use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::task::{TaskMetric, TaskVector};

/// Coefficients of the reward `r = −(λ_t L_task + λ_d ‖x − x_target‖²_W)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardWeights {
    pub lambda_t: f64,
    pub lambda_d: f64,
    /// Task loss assumed for every pretraining label.
    pub c_t: f64,
    pub metric: TaskMetric,
}

impl RewardWeights {
    pub fn new(lambda_t: f64, lambda_d: f64, c_t: f64, metric: TaskMetric) -> Result<Self> {
        let w = RewardWeights {
            lambda_t,
            lambda_d,
            c_t,
            metric,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_t >= 0.0) || !self.lambda_t.is_finite() {
            return Err(Error::config("reward.lambda_t", "weight must be non-negative"));
        }
        if !(self.lambda_d >= 0.0) || !self.lambda_d.is_finite() {
            return Err(Error::config("reward.lambda_d", "weight must be non-negative"));
        }
        if !(self.lambda_t + self.lambda_d > 0.0) {
            return Err(Error::config("reward", "lambda_t + lambda_d must be positive"));
        }
        if !(self.c_t >= 0.0) || !self.c_t.is_finite() {
            return Err(Error::config("reward.c_t", "pretraining task loss must be non-negative"));
        }
        Ok(())
    }

    fn combine(&self, task_loss: f64, dist_sq: f64) -> f64 {
        -(self.lambda_t * task_loss + self.lambda_d * dist_sq)
    }
}

/// Reward of reaching `x` with task loss `task_loss` when heading for `target`.
pub fn reward(task_loss: f64, x: &TaskVector, target: &TaskVector, w: &RewardWeights) -> f64 {
    w.combine(task_loss, w.metric.dist_sq(x, target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Provenance {
    Pretrain,
    Online,
}

/// A labelled task point with the quantities its reward was computed from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QSample {
    pub x: TaskVector,
    pub reward: f64,
    pub task_loss: f64,
    /// `‖x − x_target‖²_W`.
    pub dist_sq: f64,
    pub provenance: Provenance,
}

impl QSample {
    pub fn new(x: TaskVector, task_loss: f64, target: &TaskVector, w: &RewardWeights, provenance: Provenance) -> Self {
        let dist_sq = w.metric.dist_sq(&x, target);
        QSample {
            reward: w.combine(task_loss, dist_sq),
            x,
            task_loss,
            dist_sq,
            provenance,
        }
    }

    /// The reward re-derived from the stored components.
    pub fn recomputed_reward(&self, w: &RewardWeights) -> f64 {
        w.combine(self.task_loss, self.dist_sq)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct QDataset {
    samples: Vec<QSample>,
}

impl QDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: QSample) {
        self.samples.push(s);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[QSample] {
        &self.samples
    }

    pub fn is_online_only(&self) -> bool {
        self.samples.iter().all(|s| s.provenance == Provenance::Online)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(lt: f64, ld: f64) -> RewardWeights {
        RewardWeights::new(lt, ld, 1e-4, TaskMetric::planar(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn reward_arithmetic() {
        let target = TaskVector::planar(0.0, 0.0, 0.0);
        let x = TaskVector::planar(0.2, 0.0, 0.0);
        assert_eq!(reward(0.0, &target, &target, &weights(1.0, 1.0)), 0.0);
        assert!((reward(0.01, &x, &target, &weights(1.0, 1.0)) + 0.05).abs() < 1e-15);
        assert!((reward(0.01, &x, &target, &weights(1.0, 2.0)) + 0.09).abs() < 1e-15);
        assert!((reward(5.0, &x, &target, &weights(0.0, 1.0)) + 0.04).abs() < 1e-15);
    }

    #[test]
    fn stored_components_reproduce_reward() {
        let w = weights(1.0, 1.0);
        let target = TaskVector::planar(0.1, 0.2, 0.3);
        let s = QSample::new(TaskVector::planar(0.0, 0.1, -0.2), 0.3, &target, &w, Provenance::Online);
        assert_eq!(s.recomputed_reward(&w), s.reward);
        assert_eq!(s.reward, reward(0.3, &s.x, &target, &w));
    }

    #[test]
    fn weights_must_not_both_vanish() {
        assert!(RewardWeights::new(0.0, 0.0, 0.0, TaskMetric::planar(1.0, 1.0).unwrap()).is_err());
        assert!(RewardWeights::new(-1.0, 1.0, 0.0, TaskMetric::planar(1.0, 1.0).unwrap()).is_err());
    }
}
