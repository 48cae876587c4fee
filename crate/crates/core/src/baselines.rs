//! Comparison methods: a single long transfer step straight to the target,
//! a fixed chain of evenly spaced waypoints, and the planner with the task
//! loss removed from its reward.

use alloc::vec::Vec;

use crate::diffsim::{task_loss, EnvKind, Environment, Trajectory};
use crate::error::{Error, Result};
use crate::math;
use crate::planner::{plan, PathResult, PlanOutcome, PlanSettings};
use crate::task::TaskVector;
use crate::transfer::{transfer_step, TransferHyper};

/// Epoch cap of [`direct_transfer`].
pub const DIRECT_EPOCHS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    DiffTransfer,
    Direct,
    LinearInterp,
    DiffTransferLt0,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::DiffTransfer => "diff-transfer",
            Method::Direct => "direct",
            Method::LinearInterp => "linear-interp",
            Method::DiffTransferLt0 => "diff-transfer-lt0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineResult {
    pub method: Method,
    /// Rollouts performed.
    pub n: usize,
    /// Final distance to the target in task units (see [`task_distance`]).
    pub d: f64,
    /// Final task loss is within `ε_t`.
    pub success: bool,
    pub loss: f64,
    /// Waypoints reached, starting with the source change.
    pub path: Vec<TaskVector>,
    pub trajectory: Trajectory,
}

/// Distance between what `traj` achieves and `target`, in reporting units.
///
/// Planar push: translation error of the achieved change in metres.
/// Revolute: final joint error in degrees. Prismatic: final joint error in
/// metres.
pub fn task_distance(env: &Environment, traj: &Trajectory, target: &TaskVector) -> f64 {
    match env.kind() {
        EnvKind::PlanarPush => {
            let a = &traj.achieved_change;
            math::sqrt((a[0] - target[0]) * (a[0] - target[0]) + (a[1] - target[1]) * (a[1] - target[1]))
        }
        EnvKind::Revolute => math::abs(traj.final_joint() - env.config().goal.joint_goal).to_degrees(),
        EnvKind::Prismatic => math::abs(traj.final_joint() - env.config().goal.joint_goal),
    }
}

/// One transfer step from the source to the target with `hyper.n_epoch`
/// raised to at least [`DIRECT_EPOCHS`].
pub fn direct_transfer(env: &Environment, source: &Trajectory, target: &TaskVector, hyper: &TransferHyper) -> Result<BaselineResult> {
    let long = TransferHyper {
        n_epoch: hyper.n_epoch.max(DIRECT_EPOCHS),
        ..*hyper
    };
    chain(env, source, target, 2, &long, Method::Direct)
}

/// Transfer steps along `count` evenly spaced waypoints from the source
/// change to `target` (both included); stops at the first failed hop.
pub fn linear_interpolation_transfer(
    env: &Environment,
    source: &Trajectory,
    target: &TaskVector,
    count: usize,
    hyper: &TransferHyper,
) -> Result<BaselineResult> {
    chain(env, source, target, count, hyper, Method::LinearInterp)
}

/// Number of waypoints that keeps every hop of the straight line from
/// `source` to `target` within `spacing`.
pub fn waypoint_count(env: &Environment, source: &TaskVector, target: &TaskVector, spacing: f64) -> usize {
    let span = env.metric().dist(source, target);
    let hops = math::ceil(span / spacing) as usize;
    hops.max(1) + 1
}

fn chain(
    env: &Environment,
    source: &Trajectory,
    target: &TaskVector,
    count: usize,
    hyper: &TransferHyper,
    method: Method,
) -> Result<BaselineResult> {
    if count < 2 {
        return Err(Error::Usage("a waypoint chain needs at least its two endpoints".into()));
    }
    target.check_dim(env.task_dim())?;
    let start = source.achieved_change.clone();
    let mut path = alloc::vec![start.clone()];
    let mut current = source.clone();
    let mut n = 0;
    let mut loss = task_loss(env, source, &start)?;
    for i in 1..count {
        // the last waypoint is the target itself, not a rounded lerp
        let x = if i == count - 1 {
            target.clone()
        } else {
            start.lerp(target, i as f64 / (count - 1) as f64)
        };
        let res = transfer_step(env, &current, &x, hyper)?;
        n += res.iterations_used;
        loss = res.loss;
        current = res.trajectory;
        if !res.success {
            break;
        }
        path.push(x);
    }
    let success = path.len() == count;
    if !success {
        loss = task_loss(env, &current, target)?;
    }
    Ok(BaselineResult {
        method,
        n,
        d: task_distance(env, &current, target),
        success,
        loss,
        path,
        trajectory: current,
    })
}

/// Summary of a planner run in the baseline format.
pub fn summarize_path(env: &Environment, target: &TaskVector, result: &PathResult, method: Method) -> Result<BaselineResult> {
    let trajectory = result
        .final_trajectory()
        .ok_or_else(|| Error::Usage("path result holds no trajectory".into()))?
        .clone();
    let loss = task_loss(env, &trajectory, target)?;
    Ok(BaselineResult {
        method,
        n: result.total_n,
        d: task_distance(env, &trajectory, target),
        success: result.is_success(),
        loss,
        path: result.path.clone(),
        trajectory,
    })
}

/// The settings of the `λ_t = 0` ablation.
pub fn lt0_settings(settings: &PlanSettings) -> PlanSettings {
    let mut s = settings.clone();
    s.reward.lambda_t = 0.0;
    s
}

/// [`plan`] with the task-loss term of the reward switched off.
pub fn diff_transfer_lt0(env: &Environment, source: &Trajectory, target: &TaskVector, settings: &PlanSettings) -> Result<PlanOutcome> {
    plan(env, source, target, &lt0_settings(settings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{source_demonstration, DemoScript};
    use crate::diffsim::{make_environment, EnvConfig};

    fn setup(kind: EnvKind) -> (Environment, Trajectory, TransferHyper) {
        let env = make_environment(EnvConfig::default_for(kind)).unwrap();
        let hyper = TransferHyper::default_for(kind);
        let src = source_demonstration(&env, &DemoScript::default(), &hyper, 500).unwrap();
        (env, src, hyper)
    }

    #[test]
    fn direct_on_the_source_task_is_one_rollout() {
        let (env, src, hyper) = setup(EnvKind::PlanarPush);
        let r = direct_transfer(&env, &src, &src.achieved_change, &hyper).unwrap();
        assert!(r.success);
        assert_eq!(r.n, 1);
        assert_eq!(r.d, 0.0);
    }

    #[test]
    fn direct_equals_two_point_chain() {
        let (env, src, hyper) = setup(EnvKind::Prismatic);
        let target = TaskVector::planar(0.05, -0.03, 0.1);
        let long = TransferHyper {
            n_epoch: DIRECT_EPOCHS,
            ..hyper
        };
        let d = direct_transfer(&env, &src, &target, &long).unwrap();
        let l = linear_interpolation_transfer(&env, &src, &target, 2, &long).unwrap();
        assert_eq!(BaselineResult { method: Method::Direct, ..l }, d);
    }

    #[test]
    fn chain_needs_two_points() {
        let (env, src, hyper) = setup(EnvKind::Prismatic);
        assert!(matches!(
            linear_interpolation_transfer(&env, &src, &src.achieved_change, 1, &hyper),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn waypoint_spacing_stays_within_radius() {
        let env = make_environment(EnvConfig::planar_push()).unwrap();
        let a = TaskVector::planar(0.3, 0.0, 0.0);
        for (b, eps) in [
            (TaskVector::planar(-0.25, 0.14, 0.0), 0.1),
            (TaskVector::planar(0.3, 0.0, 0.0), 0.1),
            (TaskVector::planar(0.4, 0.0, 0.0), 0.1),
            (TaskVector::planar(0.0, 0.0, 1.0), 0.15),
        ] {
            let count = waypoint_count(&env, &a, &b, eps);
            let span = env.metric().dist(&a, &b);
            assert!(count >= 2);
            assert!(span / (count - 1) as f64 <= eps + 1e-12);
            if count > 2 {
                assert!(span / (count - 2) as f64 > eps);
            }
        }
    }

    #[test]
    fn linear_chain_reaches_a_nearby_fixture_target() {
        let (env, src, hyper) = setup(EnvKind::Revolute);
        let target = TaskVector::planar(0.05, 0.05, 0.1);
        let count = waypoint_count(&env, &src.achieved_change, &target, 0.1);
        let r = linear_interpolation_transfer(&env, &src, &target, count, &hyper).unwrap();
        assert!(r.success);
        assert_eq!(r.path.len(), count);
        assert_eq!(r.path.last(), Some(&target));
        assert!(r.d < 2.0, "{} deg", r.d);
    }

    #[test]
    fn distance_units() {
        let (env, src, _) = setup(EnvKind::Revolute);
        let goal = env.config().goal.joint_goal;
        let d = task_distance(&env, &src, &TaskVector::zeros(3));
        assert!((d - (src.final_joint() - goal).abs().to_degrees()).abs() < 1e-12);
        let (env, src, _) = setup(EnvKind::PlanarPush);
        let s = &src.achieved_change;
        let off = TaskVector::planar(s[0] + 0.03, s[1] - 0.04, s[2] + 1.0);
        assert!((task_distance(&env, &src, &off) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn lt0_only_zeroes_the_task_weight() {
        let env = make_environment(EnvConfig::planar_push()).unwrap();
        let s = PlanSettings::default_for(&env);
        let z = lt0_settings(&s);
        assert_eq!(z.reward.lambda_t, 0.0);
        let mut back = z.clone();
        back.reward.lambda_t = s.reward.lambda_t;
        assert_eq!(back, s);
    }
}
