//! Reverse-mode rollout gradients against central finite differences on
//! random short-horizon instances of every environment.

use difftransfer_core::autodiff::finite_difference_gradient;
use difftransfer_core::demo::{scripted_actions, DemoScript};
use difftransfer_core::diffsim::{
    make_environment, rollout, rollout_gradient, task_loss, ActionSequence, EnvConfig, EnvKind, RobotState,
};
use difftransfer_core::rng::component_rng;
use difftransfer_core::TaskVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

const STREAM: u64 = 0x67_7264;
pub const HORIZON: usize = 20;
pub const FD_STEP: f64 = 1e-5;
pub const ABS_TOL: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub kind: EnvKind,
    pub loss: f64,
    pub grad_norm: f64,
    /// Largest `|reverse − fd| / max(ABS_TOL, REL_TOL·|fd|)` over the
    /// coordinates; the trial passes below 1.
    pub worst_ratio: f64,
}

impl TrialReport {
    pub fn passed(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub trials: Vec<TrialReport>,
}

impl GradcheckReport {
    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| !t.passed()).count()
    }

    pub fn worst_ratio(&self) -> f64 {
        self.trials.iter().map(|t| t.worst_ratio).fold(0.0, f64::max)
    }
}

/// One trial: a perturbed instance, a noisy scripted action sequence that
/// makes contact, and a random goal.
pub fn trial(kind: EnvKind, seed: u64, index: u64) -> Result<TrialReport> {
    let mut rng = component_rng(seed.wrapping_add(index), STREAM);
    let mut cfg = EnvConfig::default_for(kind);
    cfg.robot_start[0] += rng.random_range(-0.01..0.01);
    cfg.robot_start[1] += rng.random_range(-0.01..0.01);
    let family = make_environment(cfg)?;
    let mut u = |r: f64| rng.random_range(-r..r);
    let offset = TaskVector::planar(u(0.05), u(0.05), u(0.2));
    let env = if family.is_fixture() { family.instance(&offset)? } else { family };
    let goal = match kind {
        EnvKind::PlanarPush => TaskVector::planar(u(0.1), u(0.1), u(0.3)),
        _ => offset,
    };
    let script = DemoScript {
        horizon: HORIZON,
        ..DemoScript::default()
    };
    let mut actions = scripted_actions(&env, &script)?;
    for a in actions.as_mut_slice() {
        a[0] += u(0.1);
        a[1] += u(0.1);
    }
    let robot = RobotState::at(env.config().robot_start);
    let object = env.initial_object(0.0);
    let rev = rollout_gradient(&env, &robot, &object, &actions, &goal)?;
    let flat = actions.to_flat();
    let fd = finite_difference_gradient(
        |p| {
            let a = ActionSequence::from_flat(p).expect("flat actions keep their shape");
            rollout(&env, &robot, &object, &a)
                .and_then(|t| task_loss(&env, &t, &goal))
                .unwrap_or(f64::NAN)
        },
        &flat,
        FD_STEP,
    )?;
    let reverse: Vec<f64> = rev.grad.iter().flatten().copied().collect();
    let worst_ratio = reverse
        .iter()
        .zip(&fd)
        .map(|(r, f)| (r - f).abs() / ABS_TOL.max(REL_TOL * f.abs()))
        .fold(0.0, f64::max);
    Ok(TrialReport {
        kind,
        loss: rev.loss,
        grad_norm: reverse.iter().map(|g| g * g).sum::<f64>().sqrt(),
        worst_ratio,
    })
}

/// `trials` instances cycling through the environment kinds.
pub fn gradcheck(trials: usize, seed: u64) -> Result<GradcheckReport> {
    let kinds = [EnvKind::PlanarPush, EnvKind::Revolute, EnvKind::Prismatic];
    let trials = (0..trials)
        .map(|i| trial(kinds[i % kinds.len()], seed, i as u64))
        .collect::<Result<_>>()?;
    Ok(GradcheckReport { trials })
}
