//! Desk-scale differentiable environments: a pushed box, a hinged link and a
//! sliding link, all driven by a kinematic disc end-effector.

mod dynamics;
mod env;
mod geometry;
mod rollout;
mod state;

pub use dynamics::{contact_report, step, ContactReport};
pub use env::{make_environment, signed_distance, EnvConfig, EnvKind, Environment, Geometry, Goal, Physics, TASK_DIM};
pub use geometry::{rounded_box, Pose2};
pub use rollout::{resimulates, rollout, rollout_gradient, task_loss, LossGradient};
pub use state::{Action, ActionSequence, ObjectState, RobotState, Step, Trajectory};
