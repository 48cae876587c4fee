//! Reward-guided search for a chain of sub-tasks from the source change to
//! the target change.
//!
//! Each expansion samples candidate sub-tasks around the current node, tries
//! them in order of predicted reward with [`transfer_step`], feeds every
//! outcome back into the reward model, and descends into the first one that
//! succeeds. When a node runs out of candidates the search backtracks to its
//! parent. Recursion is replaced by an explicit stack of frames.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::diffsim::{Environment, Trajectory};
use crate::error::{Error, Result};
use crate::qnet::{fit_online, init_model, predict, pretrain, reward, Provenance, QConfig, QDataset, QModel, QSample, RewardWeights};
use crate::rng::{component_rng, sample_ball, stream};
use crate::task::{TaskMetric, TaskVector};
use crate::transfer::{transfer_step, TransferHyper};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PlannerHyper {
    /// Candidates sampled per expansion.
    pub n: usize,
    /// Radius of the sampling ball (`W`-norm).
    pub eps_sample: f64,
    /// A node this close to the target attempts the final landing.
    pub eps_pose: f64,
    /// Longest admissible path, in nodes.
    pub max_depth: usize,
    /// Cap on the number of `transfer_step` calls in one search.
    pub max_attempts: usize,
    /// Rank candidates by the scores computed when they were sampled, rather
    /// than re-scoring them after every model update.
    pub freeze_candidate_scores: bool,
    pub seed: u64,
}

impl Default for PlannerHyper {
    fn default() -> Self {
        PlannerHyper {
            n: 8,
            eps_sample: 0.1,
            eps_pose: 0.07,
            max_depth: 64,
            max_attempts: 256,
            freeze_candidate_scores: true,
            seed: 0,
        }
    }
}

impl PlannerHyper {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::config("planner.n", "at least one candidate is required"));
        }
        if !(self.eps_sample > 0.0) || !self.eps_sample.is_finite() {
            return Err(Error::config("planner.eps_sample", "sampling radius must be positive"));
        }
        if !(self.eps_pose > 0.0) || !self.eps_pose.is_finite() {
            return Err(Error::config("planner.eps_pose", "termination radius must be positive"));
        }
        // the landing hop must obey the same proximity bound as sampled hops
        if self.eps_pose >= self.eps_sample {
            return Err(Error::config("planner.eps_pose", "termination radius must be below the sampling radius"));
        }
        if self.max_depth < 1 {
            return Err(Error::config("planner.max_depth", "depth cap must be at least 1"));
        }
        if self.max_attempts < 1 {
            return Err(Error::config("planner.max_attempts", "attempt cap must be at least 1"));
        }
        Ok(())
    }
}

/// Everything a planning run needs besides the environment and task pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanSettings {
    pub planner: PlannerHyper,
    pub transfer: TransferHyper,
    pub reward: RewardWeights,
    pub q: QConfig,
}

impl PlanSettings {
    pub fn validate(&self) -> Result<()> {
        self.planner.validate()?;
        self.transfer.validate()?;
        self.reward.validate()?;
        self.q.validate()
    }

    /// Defaults for `env`, with reward weights `λ_t = λ_d = 1` and
    /// `c_t = ε_t`.
    pub fn default_for(env: &Environment) -> Self {
        let transfer = TransferHyper::default_for(env.kind());
        PlanSettings {
            planner: PlannerHyper::default(),
            reward: RewardWeights {
                lambda_t: 1.0,
                lambda_d: 1.0,
                c_t: transfer.eps_t,
                metric: env.metric().clone(),
            },
            transfer,
            q: QConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PathStatus {
    Success,
    Failure,
}

/// The candidate set drawn at one expansion.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Expansion {
    /// Position of the expanded node on the path (the source is 0).
    pub depth: usize,
    pub origin: TaskVector,
    pub candidates: Vec<TaskVector>,
    /// Predicted rewards at sampling time.
    pub predicted: Vec<f64>,
    /// Whether each candidate was handed to `transfer_step`.
    pub attempted: Vec<bool>,
}

/// One `transfer_step` call made during the search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Attempt {
    /// Index into [`PathResult::expansions`]; `None` for a landing on the target.
    pub expansion: Option<usize>,
    /// Candidate index within the expansion.
    pub candidate: Option<usize>,
    pub depth: usize,
    pub x: TaskVector,
    /// Predicted reward used to select this candidate.
    pub predicted: Option<f64>,
    pub reward: f64,
    pub task_loss: f64,
    pub success: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathResult {
    pub status: PathStatus,
    /// `[x_source, …, x_target]` on success; the deepest chain reached on failure.
    pub path: Vec<TaskVector>,
    pub trajectories: Vec<Trajectory>,
    /// Epochs charged to each node: the hop that reached it plus every
    /// failed or abandoned attempt made from it.
    pub per_node_iterations: Vec<usize>,
    /// Every rollout performed in the search.
    pub total_n: usize,
    /// Rollouts of the successful hops along `path` only.
    pub chain_n: usize,
    pub expansions: Vec<Expansion>,
    pub attempts: Vec<Attempt>,
    pub failure_reason: Option<String>,
}

impl PathResult {
    pub fn is_success(&self) -> bool {
        self.status == PathStatus::Success
    }

    /// The trajectory of the last node.
    pub fn final_trajectory(&self) -> Option<&Trajectory> {
        self.trajectories.last()
    }
}

/// `n` points uniform in the open `W`-ball of radius `eps_sample` around `x`.
pub fn sample_candidates(x: &TaskVector, metric: &TaskMetric, hyper: &PlannerHyper, rng: &mut ChaCha8Rng) -> Vec<TaskVector> {
    (0..hyper.n).map(|_| sample_ball(rng, x, metric, hyper.eps_sample)).collect()
}

/// Index of the highest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.is_nan() {
            return Err(Error::Numeric(format!("score {i} is NaN")));
        }
        if best.is_none_or(|b| *s > scores[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| Error::Usage("cannot select from an empty candidate set".into()))
}

/// Index of the candidate with the highest predicted reward.
pub fn select_best(model: &QModel, candidates: &[TaskVector]) -> Result<usize> {
    let scores = candidates.iter().map(|x| predict(model, x)).collect::<Result<Vec<_>>>()?;
    argmax(&scores)
}

struct Frame {
    x: TaskVector,
    trajectory: Trajectory,
    /// Epochs of the hop into this node.
    link: usize,
    /// Epochs charged to this node so far (link, failed attempts, and
    /// abandoned subtrees).
    charged: usize,
    expansion: Option<usize>,
    /// Candidate indices not yet attempted.
    remaining: Vec<usize>,
    landing_tried: bool,
}

impl Frame {
    fn new(x: TaskVector, trajectory: Trajectory, link: usize) -> Self {
        Frame {
            x,
            trajectory,
            link,
            charged: link,
            expansion: None,
            remaining: Vec::new(),
            landing_tried: false,
        }
    }
}

struct Search<'a> {
    env: &'a Environment,
    target: &'a TaskVector,
    settings: &'a PlanSettings,
    model: &'a mut QModel,
    data: &'a mut QDataset,
    expansions: Vec<Expansion>,
    attempts: Vec<Attempt>,
}

impl Search<'_> {
    /// Runs one transfer step, records it in `D` and the log, and refits.
    fn attempt(
        &mut self,
        from: &Trajectory,
        x: &TaskVector,
        depth: usize,
        origin: (Option<usize>, Option<usize>, Option<f64>),
    ) -> Result<(bool, usize, Trajectory)> {
        let res = transfer_step(self.env, from, x, &self.settings.transfer)?;
        let w = &self.settings.reward;
        let r = reward(res.loss, x, self.target, w);
        self.data
            .push(QSample::new(x.clone(), res.loss, self.target, w, Provenance::Online));
        fit_online(self.model, self.data, self.settings.q.fit_epochs)?;
        self.attempts.push(Attempt {
            expansion: origin.0,
            candidate: origin.1,
            depth,
            x: x.clone(),
            predicted: origin.2,
            reward: r,
            task_loss: res.loss,
            success: res.success,
            iterations: res.iterations_used,
        });
        Ok((res.success, res.iterations_used, res.trajectory))
    }

    fn finish(self, stack: Vec<Frame>, status: PathStatus, failure_reason: Option<String>) -> PathResult {
        let mut path = Vec::with_capacity(stack.len());
        let mut trajectories = Vec::with_capacity(stack.len());
        let mut per_node_iterations = Vec::with_capacity(stack.len());
        let mut chain_n = 0;
        for f in stack {
            chain_n += f.link;
            per_node_iterations.push(f.charged);
            path.push(f.x);
            trajectories.push(f.trajectory);
        }
        let total_n = per_node_iterations.iter().sum();
        PathResult {
            status,
            path,
            trajectories,
            per_node_iterations,
            total_n,
            chain_n,
            expansions: self.expansions,
            attempts: self.attempts,
            failure_reason,
        }
    }
}

/// Searches for a chain of sub-tasks from `source.achieved_change` to
/// `target`.
///
/// `model` should be pretrained; it is refitted on `data` (online samples
/// only) after every transfer step, and both persist across backtracking.
/// A node within `eps_pose` of the target attempts one hop to the target
/// itself before it expands. Planning failure is reported through
/// [`PathStatus::Failure`], not as an error.
pub fn path_search(
    env: &Environment,
    source: &Trajectory,
    target: &TaskVector,
    settings: &PlanSettings,
    model: &mut QModel,
    data: &mut QDataset,
) -> Result<PathResult> {
    settings.validate()?;
    target.check_dim(env.task_dim())?;
    if !target.is_finite() {
        return Err(Error::Usage("target must be finite".into()));
    }
    if settings.reward.metric != *env.metric() {
        return Err(Error::config("reward.metric", "reward metric must match the environment's task metric"));
    }
    if model.dim() != env.task_dim() {
        return Err(Error::Usage("model dimension differs from the task dimension".into()));
    }
    if !data.is_online_only() {
        return Err(Error::Usage("the planning dataset must not contain pretraining samples".into()));
    }
    let hyper = &settings.planner;
    let metric = env.metric();
    let mut rng = component_rng(hyper.seed, stream::PLANNER);
    let mut search = Search {
        env,
        target,
        settings,
        model,
        data,
        expansions: Vec::new(),
        attempts: Vec::new(),
    };
    let mut stack = alloc::vec![Frame::new(source.achieved_change.clone(), source.clone(), 0)];

    loop {
        let depth = stack.len() - 1;
        if search.attempts.len() >= hyper.max_attempts {
            let why = format!("attempt budget of {} exhausted", hyper.max_attempts);
            return Ok(search.finish(stack, PathStatus::Failure, Some(why)));
        }
        let top = stack.last_mut().expect("stack is never empty inside the loop");

        if !top.landing_tried && metric.dist(&top.x, target) <= hyper.eps_pose {
            top.landing_tried = true;
            let from = top.trajectory.clone();
            let (ok, n, traj) = search.attempt(&from, target, depth, (None, None, None))?;
            let full = stack.len() >= hyper.max_depth;
            let top = stack.last_mut().expect("non-empty");
            if ok {
                if top.x == *target {
                    // already at the target: the hop only confirms it
                    top.charged += n;
                    top.link += n;
                    top.trajectory = traj;
                } else if full {
                    top.charged += n;
                    let why = format!("path would exceed max_depth = {}", hyper.max_depth);
                    return Ok(search.finish(stack, PathStatus::Failure, Some(why)));
                } else {
                    stack.push(Frame::new(target.clone(), traj, n));
                }
                return Ok(search.finish(stack, PathStatus::Success, None));
            }
            top.charged += n;
            continue;
        }

        if top.expansion.is_none() {
            let candidates = sample_candidates(&top.x, metric, hyper, &mut rng);
            let predicted = candidates
                .iter()
                .map(|x| predict(search.model, x))
                .collect::<Result<Vec<_>>>()?;
            top.remaining = (0..candidates.len()).collect();
            top.expansion = Some(search.expansions.len());
            search.expansions.push(Expansion {
                depth,
                origin: top.x.clone(),
                attempted: alloc::vec![false; candidates.len()],
                candidates,
                predicted,
            });
        }

        if top.remaining.is_empty() {
            let done = stack.pop().expect("non-empty");
            match stack.last_mut() {
                Some(parent) => parent.charged += done.charged,
                None => {
                    let why = String::from("candidates exhausted at the source");
                    return Ok(search.finish(alloc::vec![done], PathStatus::Failure, Some(why)));
                }
            }
            continue;
        }

        let e = top.expansion.expect("expanded above");
        let scores: Vec<f64> = if hyper.freeze_candidate_scores {
            top.remaining.iter().map(|&i| search.expansions[e].predicted[i]).collect()
        } else {
            top.remaining
                .iter()
                .map(|&i| predict(search.model, &search.expansions[e].candidates[i]))
                .collect::<Result<Vec<_>>>()?
        };
        let pick = argmax(&scores)?;
        let k = top.remaining.remove(pick);
        let x_k = search.expansions[e].candidates[k].clone();
        search.expansions[e].attempted[k] = true;
        let from = top.trajectory.clone();
        let (ok, n, traj) = search.attempt(&from, &x_k, depth, (Some(e), Some(k), Some(scores[pick])))?;
        let full = stack.len() >= hyper.max_depth;
        let top = stack.last_mut().expect("non-empty");
        if !ok {
            top.charged += n;
            continue;
        }
        if full {
            top.charged += n;
            let why = format!("path would exceed max_depth = {}", hyper.max_depth);
            return Ok(search.finish(stack, PathStatus::Failure, Some(why)));
        }
        stack.push(Frame::new(x_k, traj, n));
    }
}

/// A planning run together with the model and data it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub result: PathResult,
    pub model: QModel,
    /// Online samples gathered during the search.
    pub data: QDataset,
    pub pretrain_data: QDataset,
}

/// Initializes and pretrains a reward model for `target`, then runs
/// [`path_search`] from `source`. The pretraining ball is centred on the
/// target with radius `q.radius_factor · ‖target − x_source‖_W`.
pub fn plan(env: &Environment, source: &Trajectory, target: &TaskVector, settings: &PlanSettings) -> Result<PlanOutcome> {
    settings.validate()?;
    target.check_dim(env.task_dim())?;
    let seed = settings.planner.seed;
    let mut model = init_model(env.task_dim(), settings.q.hidden, seed)?;
    let span = env.metric().dist(target, &source.achieved_change);
    // a degenerate task still needs a ball the size of one hop
    let radius = settings.q.radius_factor * span.max(settings.planner.eps_sample);
    let pretrain_data = pretrain(&mut model, target, &settings.reward, &settings.q, radius, seed)?;
    let mut data = QDataset::new();
    let result = path_search(env, source, target, settings, &mut model, &mut data)?;
    Ok(PlanOutcome {
        result,
        model,
        data,
        pretrain_data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{source_demonstration, DemoScript};
    use crate::diffsim::{make_environment, EnvConfig, EnvKind};
    use crate::qnet::Mlp;
    use crate::rng::component_rng;
    use proptest::prelude::*;

    fn metric() -> TaskMetric {
        TaskMetric::planar(1.0, 1.0).unwrap()
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]).unwrap(), 1);
        assert_eq!(argmax(&[-1.0]).unwrap(), 0);
        assert!(matches!(argmax(&[]), Err(Error::Usage(_))));
        assert!(matches!(argmax(&[0.0, f64::NAN]), Err(Error::Numeric(_))));
    }

    #[test]
    fn constant_model_selects_first() {
        let model = QModel::from_network(Mlp::zeros(3, 4), 1e-3);
        let c = [TaskVector::planar(0.1, 0.0, 0.0), TaskVector::planar(0.0, 0.1, 0.0)];
        assert_eq!(select_best(&model, &c).unwrap(), 0);
        assert!(matches!(select_best(&model, &[]), Err(Error::Usage(_))));
    }

    #[test]
    fn candidates_are_reproducible_and_inside_the_ball() {
        let hyper = PlannerHyper {
            n: 64,
            ..PlannerHyper::default()
        };
        let x = TaskVector::planar(0.2, -0.1, 0.3);
        let a = sample_candidates(&x, &metric(), &hyper, &mut component_rng(3, stream::PLANNER));
        let b = sample_candidates(&x, &metric(), &hyper, &mut component_rng(3, stream::PLANNER));
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert!(a.iter().all(|c| metric().dist(&x, c) < hyper.eps_sample));
    }

    #[test]
    fn candidate_mean_is_the_centre() {
        let hyper = PlannerHyper {
            n: 10_000,
            ..PlannerHyper::default()
        };
        let x = TaskVector::planar(0.2, -0.1, 0.3);
        let s = sample_candidates(&x, &metric(), &hyper, &mut component_rng(5, stream::PLANNER));
        let mut mean = [0.0; 3];
        for c in &s {
            for k in 0..3 {
                mean[k] += c[k] / s.len() as f64;
            }
        }
        let m = TaskVector::planar(mean[0], mean[1], mean[2]);
        assert!(metric().dist(&m, &x) < 0.05 * hyper.eps_sample);
    }

    #[test]
    fn hyper_validation() {
        let ok = PlannerHyper::default();
        ok.validate().unwrap();
        for bad in [
            PlannerHyper { n: 0, ..ok.clone() },
            PlannerHyper { eps_sample: 0.0, ..ok.clone() },
            PlannerHyper { eps_pose: -0.1, ..ok.clone() },
            PlannerHyper { eps_pose: 0.2, ..ok.clone() },
            PlannerHyper { max_depth: 0, ..ok.clone() },
            PlannerHyper { max_attempts: 0, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config { .. })), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn argmax_of_negated_distance_is_nearest(
            pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..20),
        ) {
            let target = TaskVector::planar(0.1, 0.2, -0.3);
            let xs: Vec<TaskVector> = pts.iter().map(|p| TaskVector::planar(p.0, p.1, p.2)).collect();
            let scores: Vec<f64> = xs.iter().map(|x| -metric().dist_sq(x, &target)).collect();
            let k = argmax(&scores).unwrap();
            let nearest = (0..xs.len())
                .min_by(|&a, &b| metric().dist_sq(&xs[a], &target).total_cmp(&metric().dist_sq(&xs[b], &target)))
                .unwrap();
            prop_assert_eq!(scores[k], scores[nearest]);
            prop_assert!(scores[..k].iter().all(|s| *s < scores[k]));
        }

        #[test]
        fn reselecting_after_removal_gives_second_best(scores in prop::collection::vec(-10.0..10.0f64, 2..20)) {
            let k = argmax(&scores).unwrap();
            let mut rest = scores.clone();
            rest.remove(k);
            let j = argmax(&rest).unwrap();
            prop_assert!(rest[j] <= scores[k]);
            prop_assert!(scores.iter().enumerate().filter(|(i, _)| *i != k).all(|(_, s)| *s <= rest[j]));
        }
    }

    fn short_planar() -> (Environment, Trajectory, PlanSettings) {
        let env = make_environment(EnvConfig::planar_push()).unwrap();
        let mut settings = PlanSettings::default_for(&env);
        settings.q.n_pre = 128;
        settings.q.pretrain_epochs = 100;
        settings.q.fit_epochs = 10;
        let script = DemoScript {
            horizon: 30,
            ..DemoScript::default()
        };
        let src = source_demonstration(&env, &script, &settings.transfer, 1).unwrap();
        (env, src, settings)
    }

    #[test]
    fn degenerate_target_is_one_confirming_step() {
        let (env, src, settings) = short_planar();
        let out = plan(&env, &src, &src.achieved_change, &settings).unwrap();
        let r = &out.result;
        assert!(r.is_success());
        assert_eq!(r.path, alloc::vec![src.achieved_change.clone()]);
        assert_eq!(r.total_n, 1);
        assert_eq!(out.data.len(), 1);
        assert!(r.expansions.is_empty());
    }

    #[test]
    fn unreachable_target_fails_without_error() {
        let (env, src, mut settings) = short_planar();
        settings.planner.max_depth = 5;
        settings.planner.n = 2;
        settings.transfer.n_epoch = 20;
        let target = TaskVector::planar(10.0, 0.0, 0.0);
        let out = plan(&env, &src, &target, &settings).unwrap();
        let r = &out.result;
        assert_eq!(r.status, PathStatus::Failure);
        assert!(r.failure_reason.is_some());
        assert!(!r.expansions.is_empty());
        assert!(r.path.len() <= 5);
        assert_eq!(out.data.len(), r.attempts.len());
        assert_eq!(r.total_n, r.attempts.iter().map(|a| a.iterations).sum::<usize>());
    }

    #[test]
    fn config_errors_precede_simulation() {
        let (env, src, settings) = short_planar();
        let mut bad = settings.clone();
        bad.reward.metric = TaskMetric::planar(2.0, 1.0).unwrap();
        let mut model = init_model(3, 4, 0).unwrap();
        let mut data = QDataset::new();
        let err = path_search(&env, &src, &src.achieved_change, &bad, &mut model, &mut data).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        assert!(data.is_empty());
        let wrong = TaskVector::planar(0.0, 0.0, 0.0);
        let mut model2 = init_model(2, 4, 0).unwrap();
        assert!(path_search(&env, &src, &wrong, &settings, &mut model2, &mut data).is_err());
        let fixture = make_environment(EnvConfig::default_for(EnvKind::Revolute)).unwrap();
        let other = PlanSettings::default_for(&fixture);
        assert_eq!(other.reward.metric, *fixture.metric());
    }
}
