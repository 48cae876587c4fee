//! Gradient-descent adaptation of an action sequence from one sub-task to an
//! adjacent one.

use alloc::format;
use alloc::string::String;

use crate::diffsim::{rollout_gradient, ActionSequence, EnvKind, Environment, Trajectory};
use crate::error::{Error, Result};
use crate::math;
use crate::task::TaskVector;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TransferHyper {
    /// Learning rate of the descent step.
    pub eta: f64,
    /// Maximum number of rollouts.
    pub n_epoch: usize,
    /// Success threshold on the task loss.
    pub eps_t: f64,
    /// Gradients are rescaled to at most this Euclidean norm.
    pub grad_clip: f64,
}

impl TransferHyper {
    /// Defaults for an environment kind. The learning rate is matched to how
    /// strongly one action moves the task outcome in that environment; a
    /// tight clip bounds the step length where the loss surface is steep.
    pub fn default_for(kind: EnvKind) -> Self {
        let (eta, grad_clip) = match kind {
            EnvKind::PlanarPush => (100.0, 0.005),
            EnvKind::Revolute => (5.0, 1.0),
            EnvKind::Prismatic => (20.0, 0.01),
        };
        TransferHyper {
            eta,
            n_epoch: 200,
            eps_t: 1e-4,
            grad_clip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::config("transfer.eta", "learning rate must be positive"));
        }
        if self.n_epoch < 1 {
            return Err(Error::config("transfer.n_epoch", "at least one epoch is required"));
        }
        if !(self.eps_t > 0.0) {
            return Err(Error::config("transfer.eps_t", "success threshold must be positive"));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::config("transfer.grad_clip", "gradient clip must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one transfer step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubTaskResult {
    /// Task loss of the returned trajectory.
    pub loss: f64,
    /// `loss <= eps_t`.
    pub success: bool,
    pub trajectory: Trajectory,
    /// Number of rollouts performed.
    pub iterations_used: usize,
    /// Set when the loop stopped on a non-finite value.
    pub diagnostic: Option<String>,
}

/// `A − η · g`, with `g` rescaled to Euclidean norm at most `clip`.
pub fn action_update(actions: &ActionSequence, grad: &[[f64; 2]], eta: f64, clip: f64) -> ActionSequence {
    assert_eq!(actions.horizon(), grad.len(), "gradient shape must match the action sequence");
    let norm = math::sqrt(grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).sum::<f64>());
    let scale = if norm > clip { clip / norm } else { 1.0 };
    let mut next = actions.clone();
    for (a, g) in next.as_mut_slice().iter_mut().zip(grad) {
        a[0] -= eta * scale * g[0];
        a[1] -= eta * scale * g[1];
    }
    next
}

/// Adapts the actions of `from` (a solved trajectory of some sub-task) to
/// sub-task `x_next`.
///
/// Each epoch rolls out the current actions in the instance of `x_next`,
/// evaluates the task loss, and returns as soon as it is within `eps_t`;
/// otherwise it takes one clipped gradient step. The initial robot state and
/// joint state are taken from `from`.
pub fn transfer_step(env: &Environment, from: &Trajectory, x_next: &TaskVector, hyper: &TransferHyper) -> Result<SubTaskResult> {
    x_next.check_dim(env.task_dim())?;
    hyper.validate()?;
    let instance = env.instance(x_next)?;
    let first = from.first();
    let s_r = first.robot;
    let s_o = if instance.is_fixture() {
        let mut o = instance.initial_object(first.object.joint);
        o.joint_vel = first.object.joint_vel;
        o
    } else {
        first.object
    };

    let mut actions = from.actions();
    let mut best: Option<(f64, Trajectory)> = None;
    for epoch in 1..=hyper.n_epoch {
        let step = match rollout_gradient(&instance, &s_r, &s_o, &actions, x_next) {
            Ok(step) => step,
            Err(err) => return Ok(failure(best, from, epoch, format!("epoch {epoch}: {err}"))),
        };
        if step.loss <= hyper.eps_t {
            return Ok(SubTaskResult {
                loss: step.loss,
                success: true,
                trajectory: step.trajectory,
                iterations_used: epoch,
                diagnostic: None,
            });
        }
        if epoch == hyper.n_epoch {
            return Ok(SubTaskResult {
                loss: step.loss,
                success: false,
                trajectory: step.trajectory,
                iterations_used: epoch,
                diagnostic: None,
            });
        }
        actions = action_update(&actions, &step.grad, hyper.eta, hyper.grad_clip);
        best = Some((step.loss, step.trajectory));
        if actions.to_flat().iter().any(|v| !v.is_finite()) {
            return Ok(failure(best, from, epoch, format!("epoch {epoch}: non-finite action update")));
        }
    }
    unreachable!("the final epoch always returns")
}

fn failure(last: Option<(f64, Trajectory)>, from: &Trajectory, epoch: usize, why: String) -> SubTaskResult {
    let (loss, trajectory) = last.unwrap_or((f64::INFINITY, from.clone()));
    SubTaskResult {
        loss,
        success: false,
        trajectory,
        iterations_used: epoch,
        diagnostic: Some(why),
    }
}
