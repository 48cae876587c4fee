use difftransfer_core::demo::{source_demonstration, DemoScript};
use difftransfer_core::diffsim::*;
use difftransfer_core::planner::*;
use difftransfer_core::qnet::Provenance;
use difftransfer_core::rng::{component_rng, sample_ball, stream};
use difftransfer_core::transfer::{transfer_step, TransferHyper};
use difftransfer_core::TaskVector;
use proptest::prelude::*;

fn planar() -> (Environment, Trajectory) {
    let env = make_environment(EnvConfig::planar_push()).unwrap();
    let hyper = TransferHyper::default_for(EnvKind::PlanarPush);
    let src = source_demonstration(&env, &DemoScript::default(), &hyper, 1).unwrap();
    (env, src)
}

fn rotated(x: &TaskVector, degrees: f64) -> TaskVector {
    let (s, c) = degrees.to_radians().sin_cos();
    TaskVector::planar(c * x[0] - s * x[1], s * x[0] + c * x[1], x[2])
}

/// Checks every structural invariant of a finished search.
fn check_invariants(env: &Environment, target: &TaskVector, settings: &PlanSettings, out: &PlanOutcome) {
    let r = &out.result;
    // one sample per transfer step, each with a consistent reward
    assert_eq!(out.data.len(), r.attempts.len());
    for (s, a) in out.data.samples().iter().zip(&r.attempts) {
        assert_eq!(s.provenance, Provenance::Online);
        assert_eq!(s.x, a.x);
        assert!((s.recomputed_reward(&settings.reward) - s.reward).abs() <= 1e-12);
        assert!((a.reward - s.reward).abs() <= 1e-12);
    }
    assert!(out.pretrain_data.samples().iter().all(|s| s.provenance == Provenance::Pretrain));
    let metric = env.metric();
    for w in r.path.windows(2) {
        assert!(metric.dist(&w[0], &w[1]) < settings.planner.eps_sample);
    }
    assert_eq!(r.total_n, r.per_node_iterations.iter().sum::<usize>());
    assert_eq!(r.total_n, r.attempts.iter().map(|a| a.iterations).sum::<usize>());
    assert!(r.chain_n <= r.total_n);
    assert_eq!(r.path.len(), r.trajectories.len());
    // frozen scores: each expansion is tried best first
    if settings.planner.freeze_candidate_scores {
        for e in 0..r.expansions.len() {
            let tried: Vec<f64> = r
                .attempts
                .iter()
                .filter(|a| a.expansion == Some(e))
                .map(|a| a.predicted.unwrap())
                .collect();
            assert!(tried.windows(2).all(|w| w[0] >= w[1]), "{tried:?}");
        }
    }
    if r.is_success() {
        assert_eq!(r.path.last(), Some(target));
        let last = r.final_trajectory().unwrap();
        let instance = env.instance(target).unwrap();
        assert!(resimulates(&instance, last));
        assert!(task_loss(&instance, last, target).unwrap() <= settings.transfer.eps_t);
    }
}

#[test]
fn thirty_degree_rotation_is_planned() {
    let (env, src) = planar();
    let target = rotated(&src.achieved_change, 30.0);
    let mut settings = PlanSettings::default_for(&env);
    settings.planner.eps_sample = 0.15;
    settings.planner.n = 8;
    let out = plan(&env, &src, &target, &settings).unwrap();
    assert!(out.result.is_success(), "{:?}", out.result.failure_reason);
    check_invariants(&env, &target, &settings, &out);
    let again = plan(&env, &src, &target, &settings).unwrap();
    assert_eq!(again, out);
}

#[test]
fn rescored_candidates_also_reach_the_target() {
    let (env, src) = planar();
    let target = rotated(&src.achieved_change, 30.0);
    let mut settings = PlanSettings::default_for(&env);
    settings.planner.freeze_candidate_scores = false;
    settings.planner.seed = 3;
    let out = plan(&env, &src, &target, &settings).unwrap();
    assert!(out.result.is_success(), "{:?}", out.result.failure_reason);
    check_invariants(&env, &target, &settings, &out);
}

#[test]
fn fixture_offset_is_planned() {
    let env = make_environment(EnvConfig::prismatic()).unwrap();
    let settings = PlanSettings::default_for(&env);
    let src = source_demonstration(&env, &DemoScript::default(), &settings.transfer, 500).unwrap();
    let target = TaskVector::planar(0.1, 0.05, 0.1);
    let out = plan(&env, &src, &target, &settings).unwrap();
    assert!(out.result.is_success(), "{:?}", out.result.failure_reason);
    check_invariants(&env, &target, &settings, &out);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// A reported success always survives re-simulation from scratch.
    #[test]
    fn transfer_success_is_sound(seed in 0u64..1000) {
        let (env, src) = planar();
        let hyper = TransferHyper::default_for(EnvKind::PlanarPush);
        let mut rng = component_rng(seed, stream::PERTURBATIONS);
        let x = sample_ball(&mut rng, &src.achieved_change, env.metric(), 0.15);
        let r = transfer_step(&env, &src, &x, &hyper).unwrap();
        prop_assert_eq!(r.success, r.loss <= hyper.eps_t);
        prop_assert!(r.iterations_used >= 1 && r.iterations_used <= hyper.n_epoch);
        let first = r.trajectory.first();
        let again = rollout(&env, &first.robot, &first.object, &r.trajectory.actions()).unwrap();
        prop_assert_eq!(task_loss(&env, &again, &x).unwrap(), r.loss);
    }
}
