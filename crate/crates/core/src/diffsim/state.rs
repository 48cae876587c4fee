use alloc::format;
use alloc::vec::Vec;

use super::geometry::Pose2;
use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::task::TaskVector;

/// Planar end-effector position (m) and velocity (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RobotState {
    pub q: [f64; 2],
    pub v: [f64; 2],
}

impl RobotState {
    pub fn at(q: [f64; 2]) -> Self {
        RobotState { q, v: [0.0; 2] }
    }
}

/// Object state: base pose and rate `(vx, vy, ω)`, joint value and rate.
///
/// For planar push the joint is unused; for fixtures the base is constant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectState {
    pub base: Pose2,
    pub joint: f64,
    pub base_vel: [f64; 3],
    pub joint_vel: f64,
}

/// Commanded end-effector velocity (m/s).
pub type Action = [f64; 2];

/// The `T × 2` optimization variable of a transfer step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ActionSequence(Vec<Action>);

impl ActionSequence {
    pub fn new(actions: Vec<Action>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Usage("an action sequence needs at least one step".into()));
        }
        if let Some(t) = actions.iter().position(|a| !(a[0].is_finite() && a[1].is_finite())) {
            return Err(Error::Numeric(format!("action {t} is not finite")));
        }
        Ok(ActionSequence(actions))
    }

    pub fn zeros(horizon: usize) -> Self {
        ActionSequence(alloc::vec![[0.0; 2]; horizon.max(1)])
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Action] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Action] {
        &mut self.0
    }

    /// Row-major `[u0x, u0y, u1x, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().flat_map(|a| a.iter().copied()).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::Usage("flat action buffer must have even length".into()));
        }
        Self::new(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }
}

/// One recorded timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Step {
    pub robot: RobotState,
    pub object: ObjectState,
    pub action: Action,
}

/// A rollout: `T` states with the action applied at each (the last action is
/// never simulated), and the task-space change it achieved.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub achieved_change: TaskVector,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn actions(&self) -> ActionSequence {
        ActionSequence(self.steps.iter().map(|s| s.action).collect())
    }

    pub fn first(&self) -> &Step {
        &self.steps[0]
    }

    pub fn last(&self) -> &Step {
        self.steps.last().expect("trajectory is never empty")
    }

    /// Final joint value.
    pub fn final_joint(&self) -> f64 {
        self.last().object.joint
    }
}

/// Full simulation state in a scalar type that may be taped.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SimState<S> {
    pub q_r: [S; 2],
    pub v_r: [S; 2],
    pub base: [S; 3],
    pub base_vel: [S; 3],
    pub joint: S,
    pub joint_vel: S,
}

impl<S: Real> SimState<S> {
    pub fn from_states(robot: &RobotState, object: &ObjectState, mut lift: impl FnMut(f64) -> S) -> Self {
        SimState {
            q_r: [lift(robot.q[0]), lift(robot.q[1])],
            v_r: [lift(robot.v[0]), lift(robot.v[1])],
            base: [lift(object.base.x), lift(object.base.y), lift(object.base.phi)],
            base_vel: [lift(object.base_vel[0]), lift(object.base_vel[1]), lift(object.base_vel[2])],
            joint: lift(object.joint),
            joint_vel: lift(object.joint_vel),
        }
    }

    pub fn robot(&self) -> RobotState {
        RobotState {
            q: [self.q_r[0].value(), self.q_r[1].value()],
            v: [self.v_r[0].value(), self.v_r[1].value()],
        }
    }

    pub fn object(&self) -> ObjectState {
        ObjectState {
            base: Pose2::new(self.base[0].value(), self.base[1].value(), self.base[2].value()),
            joint: self.joint.value(),
            base_vel: [
                self.base_vel[0].value(),
                self.base_vel[1].value(),
                self.base_vel[2].value(),
            ],
            joint_vel: self.joint_vel.value(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q_r
            .iter()
            .chain(&self.v_r)
            .chain(&self.base)
            .chain(&self.base_vel)
            .chain([&self.joint, &self.joint_vel])
            .all(|v| v.value().is_finite())
    }
}
