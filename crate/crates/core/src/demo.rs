//! Scripted source demonstrations.
//!
//! The source trajectory of every experiment is produced here: a simple
//! feedback script drives the end-effector, and fixture demonstrations are
//! then polished by gradient descent until they meet the joint goal.

use alloc::format;
use alloc::vec::Vec;

use crate::diffsim::{rollout, step, task_loss, ActionSequence, EnvKind, Environment, RobotState, Trajectory};
use crate::error::{Error, Result};
use crate::task::TaskVector;
use crate::transfer::{transfer_step, TransferHyper};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DemoScript {
    /// Number of states `T`.
    pub horizon: usize,
    /// Commanded pushing speed (m/s).
    pub speed: f64,
    /// Fraction of the horizon spent pushing (planar push).
    pub push_fraction: f64,
}

impl Default for DemoScript {
    fn default() -> Self {
        DemoScript {
            horizon: 100,
            speed: 0.3,
            push_fraction: 1.0,
        }
    }
}

impl DemoScript {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::config("demo.horizon", "horizon must be at least 1"));
        }
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            return Err(Error::config("demo.speed", "speed must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.push_fraction) {
            return Err(Error::config("demo.push_fraction", "fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// The scripted (unpolished) action sequence for the source instance.
pub fn scripted_actions(env: &Environment, script: &DemoScript) -> Result<ActionSequence> {
    script.validate()?;
    let base = env.base();
    let (c, s) = (math::cos(base.phi), math::sin(base.phi));
    // push direction in the base frame
    let local = match env.kind() {
        EnvKind::PlanarPush | EnvKind::Prismatic => [1.0, 0.0],
        EnvKind::Revolute => [0.0, 1.0],
    };
    let dir = [c * local[0] - s * local[1], s * local[0] + c * local[1]];
    let push = [dir[0] * script.speed, dir[1] * script.speed];
    let goal = env.config().goal.joint_goal;

    let mut robot = RobotState::at(env.config().robot_start);
    let mut object = env.initial_object(0.0);
    let push_steps = (script.horizon as f64 * script.push_fraction) as usize;
    let mut actions = Vec::with_capacity(script.horizon);
    for t in 0..script.horizon {
        let active = match env.kind() {
            EnvKind::PlanarPush => t < push_steps,
            // stop once the joint is within a coasting margin of its goal
            EnvKind::Revolute | EnvKind::Prismatic => object.joint < goal - 0.01 * goal.signum(),
        };
        let a = if active { push } else { [0.0, 0.0] };
        actions.push(a);
        let (r, o) = step(env, &robot, &object, &a)?;
        robot = r;
        object = o;
    }
    ActionSequence::new(actions)
}

/// Source trajectory of `env`'s source task, verified against `hyper.eps_t`.
///
/// Planar push defines its source task as whatever the script achieves.
/// Fixture scripts are refined by [`transfer_step`] on the source instance
/// (allowing `polish_epochs` rollouts) until the joint goal is met.
pub fn source_demonstration(
    env: &Environment,
    script: &DemoScript,
    hyper: &TransferHyper,
    polish_epochs: usize,
) -> Result<Trajectory> {
    let actions = scripted_actions(env, script)?;
    let robot = RobotState::at(env.config().robot_start);
    let object = env.initial_object(0.0);
    let traj = rollout(env, &robot, &object, &actions)?;
    if !env.is_fixture() {
        return Ok(traj);
    }
    let origin = TaskVector::zeros(env.task_dim());
    if task_loss(env, &traj, &origin)? <= hyper.eps_t {
        return Ok(traj);
    }
    let polish = TransferHyper {
        n_epoch: polish_epochs.max(1),
        ..*hyper
    };
    let refined = transfer_step(env, &traj, &origin, &polish)?;
    if !refined.success {
        return Err(Error::Numeric(format!(
            "source demonstration for {} reaches loss {:.3e}, above eps_t = {:.1e}",
            env.kind().name(),
            refined.loss,
            hyper.eps_t
        )));
    }
    Ok(refined.trajectory)
}
