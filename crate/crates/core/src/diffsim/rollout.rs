use alloc::format;
use alloc::vec::Vec;

use super::dynamics::advance;
use super::env::{Environment, TASK_DIM};
use super::state::{ActionSequence, ObjectState, RobotState, SimState, Step, Trajectory};
use crate::autodiff::{Real, Tape};
use crate::error::{Error, Result};
use crate::task::TaskVector;

/// Applies `actions[0..T-1]` from `init`; returns all `T` states.
fn simulate<S: Real>(env: &Environment, init: SimState<S>, actions: &[[S; 2]]) -> Result<Vec<SimState<S>>> {
    let mut states = Vec::with_capacity(actions.len());
    states.push(init);
    for t in 0..actions.len().saturating_sub(1) {
        let next = advance(env, &states[t], actions[t]);
        if !next.is_finite() {
            return Err(Error::Numeric(format!("non-finite state at step {} of {}", t + 1, actions.len())));
        }
        states.push(next);
    }
    Ok(states)
}

/// Task loss from the first and last simulated states.
fn loss_between<S: Real>(env: &Environment, first: &SimState<S>, last: &SimState<S>, x: &TaskVector) -> S {
    if env.is_fixture() {
        joint_loss(env, last.joint)
    } else {
        let diffs = [
            last.base[0] - first.base[0],
            last.base[1] - first.base[1],
            last.base[2] - first.base[2],
        ];
        pose_loss(env, diffs, x)
    }
}

fn pose_loss<S: Real>(env: &Environment, diffs: [S; 3], x: &TaskVector) -> S {
    let w = env.metric().weights();
    let mut loss = (diffs[0] - x[0]).square() * w[0];
    for i in 1..TASK_DIM {
        loss = loss + (diffs[i] - x[i]).square() * w[i];
    }
    loss
}

fn joint_loss<S: Real>(env: &Environment, joint: S) -> S {
    let goal = &env.config().goal;
    (joint - goal.joint_goal).square() * goal.w_q
}

fn record(env: &Environment, states: &[SimState<f64>], actions: &ActionSequence) -> Trajectory {
    let steps: Vec<Step> = states
        .iter()
        .zip(actions.as_slice())
        .map(|(s, a)| Step {
            robot: s.robot(),
            object: s.object(),
            action: *a,
        })
        .collect();
    let achieved_change = env.achieved_change(&steps[0].object, &steps[steps.len() - 1].object);
    Trajectory { steps, achieved_change }
}

/// Simulates `actions` from the given initial states.
pub fn rollout(env: &Environment, s_r1: &RobotState, s_o1: &ObjectState, actions: &ActionSequence) -> Result<Trajectory> {
    let init = SimState::from_states(s_r1, s_o1, |x| x);
    let states = simulate(env, init, actions.as_slice())?;
    Ok(record(env, &states, actions))
}

/// Weighted squared distance between the achieved outcome of `traj` and
/// task `x`: pose change for planar push, joint goal error for fixtures.
pub fn task_loss(env: &Environment, traj: &Trajectory, x: &TaskVector) -> Result<f64> {
    x.check_dim(env.task_dim())?;
    if env.is_fixture() {
        Ok(joint_loss(env, traj.final_joint()))
    } else {
        let a = &traj.achieved_change;
        Ok(pose_loss(env, [a[0], a[1], a[2]], x))
    }
}

/// Loss, its gradient with respect to every action coordinate, and the
/// trajectory that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub grad: Vec<[f64; 2]>,
    pub trajectory: Trajectory,
}

/// Reverse-mode derivative of `task_loss(rollout(..), x)` with respect to the
/// action sequence. `env` must already be the instance for `x`.
pub fn rollout_gradient(
    env: &Environment,
    s_r1: &RobotState,
    s_o1: &ObjectState,
    actions: &ActionSequence,
    x: &TaskVector,
) -> Result<LossGradient> {
    x.check_dim(env.task_dim())?;
    let horizon = actions.horizon();
    let tape = Tape::with_capacity(horizon * 256);
    let action_vars: Vec<[_; 2]> = actions
        .as_slice()
        .iter()
        .map(|a| [tape.lift(a[0]), tape.lift(a[1])])
        .collect();
    let init = SimState::from_states(s_r1, s_o1, |v| tape.lift(v));
    let states = simulate(env, init, &action_vars)?;
    let loss = loss_between(env, &states[0], &states[states.len() - 1], x);

    let plain: Vec<SimState<f64>> = states
        .iter()
        .map(|s| SimState::from_states(&s.robot(), &s.object(), |v| v))
        .collect();
    let trajectory = record(env, &plain, actions);

    let adjoints = tape.adjoints(loss);
    let grad = action_vars
        .iter()
        .map(|a| [adjoints[a[0].index()], adjoints[a[1].index()]])
        .collect();
    if !loss.value().is_finite() {
        return Err(Error::Numeric("non-finite task loss".into()));
    }
    Ok(LossGradient {
        loss: loss.value(),
        grad,
        trajectory,
    })
}

/// Re-simulates the actions of `traj` from its first state and checks that
/// every recorded state is reproduced exactly.
pub fn resimulates(env: &Environment, traj: &Trajectory) -> bool {
    let first = traj.first();
    match rollout(env, &first.robot, &first.object, &traj.actions()) {
        Ok(again) => again == *traj,
        Err(_) => false,
    }
}
