use difftransfer_core::demo::{scripted_actions, DemoScript};
use difftransfer_core::diffsim::*;
use difftransfer_core::TaskVector;
use proptest::prelude::*;

/// Signed distance to a rounded rectangle by brute force: nearest of many
/// boundary samples, negative when the point is inside.
fn sdf_oracle(p: [f64; 2], half: [f64; 2], radius: f64) -> f64 {
    let mut best = f64::INFINITY;
    let n = 4000;
    // straight edges of the inflated box
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let x = -half[0] + 2.0 * half[0] * t;
        let y = -half[1] + 2.0 * half[1] * t;
        for q in [
            [x, half[1] + radius],
            [x, -half[1] - radius],
            [half[0] + radius, y],
            [-half[0] - radius, y],
        ] {
            best = best.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
    }
    // corner arcs
    for i in 0..=n {
        let a = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            let q = [sx * (half[0] + radius * a.cos()), sy * (half[1] + radius * a.sin())];
            best = best.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
    }
    let (ax, ay) = (p[0].abs() - half[0], p[1].abs() - half[1]);
    let inside = if ax > 0.0 && ay > 0.0 {
        ax * ax + ay * ay < radius * radius
    } else {
        ax < radius && ay < radius
    };
    if inside {
        -best
    } else {
        best
    }
}

fn rollout_from_start(env: &Environment, actions: &ActionSequence) -> Trajectory {
    let robot = RobotState::at(env.config().robot_start);
    rollout(env, &robot, &env.initial_object(0.0), actions).unwrap()
}

fn push_actions(env: &Environment, horizon: usize) -> ActionSequence {
    scripted_actions(
        env,
        &DemoScript {
            horizon,
            ..DemoScript::default()
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rounded_box_matches_brute_force(
        x in -0.3..0.3f64, y in -0.3..0.3f64,
        hx in 0.01..0.15f64, hy in 0.01..0.15f64, r in 0.0..0.05f64,
    ) {
        let (d, n) = rounded_box([x, y], [hx, hy], r);
        let oracle = sdf_oracle([x, y], [hx, hy], r);
        // the oracle's boundary sampling resolves about 1e-4 m
        prop_assert!((d - oracle).abs() < 2e-4, "{d} vs {oracle}");
        prop_assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn friction_stays_inside_the_cone(
        kind in prop::sample::select(vec![EnvKind::PlanarPush, EnvKind::Revolute, EnvKind::Prismatic]),
        dx in -0.05..0.05f64, dy in -0.05..0.05f64,
        ux in -2.0..2.0f64, uy in -2.0..2.0f64,
        vx in -0.5..0.5f64, vy in -0.5..0.5f64, w in -2.0..2.0f64, qd in -1.0..1.0f64,
    ) {
        let env = make_environment(EnvConfig::default_for(kind)).unwrap();
        let h = env.handle_position();
        let mut object = env.initial_object(0.0);
        object.base_vel = [vx, vy, w];
        object.joint_vel = qd;
        let robot = RobotState::at([h[0] + dx - 0.06, h[1] + dy]);
        let c = contact_report(&env, &robot, &object, &[ux, uy]);
        let mu = env.physics().friction;
        prop_assert!(c.normal_force >= 0.0);
        prop_assert!(c.tangential_force.abs() <= mu * c.normal_force * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn rollouts_are_bit_identical(
        kind in prop::sample::select(vec![EnvKind::PlanarPush, EnvKind::Revolute, EnvKind::Prismatic]),
        noise in prop::collection::vec(-0.2..0.2f64, 60),
    ) {
        let env = make_environment(EnvConfig::default_for(kind)).unwrap();
        let mut actions = push_actions(&env, 30);
        for (a, n) in actions.as_mut_slice().iter_mut().zip(noise.chunks(2)) {
            a[0] += n[0];
            a[1] += n[1];
        }
        let a = rollout_from_start(&env, &actions);
        let b = rollout_from_start(&env, &actions);
        prop_assert_eq!(&a, &b);
        prop_assert!(resimulates(&env, &a));
    }

    #[test]
    fn translating_the_scene_keeps_the_pose_change(ox in -0.3..0.3f64, oy in -0.3..0.3f64) {
        let base = make_environment(EnvConfig::planar_push()).unwrap();
        let actions = push_actions(&base, 60);
        let mut cfg = EnvConfig::planar_push();
        cfg.base_pose = Pose2::new(ox, oy, 0.0);
        cfg.robot_start = [cfg.robot_start[0] + ox, cfg.robot_start[1] + oy];
        let moved = make_environment(cfg).unwrap();
        let a = rollout_from_start(&base, &actions).achieved_change;
        let b = rollout_from_start(&moved, &actions).achieved_change;
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() < 1e-9, "{:?} vs {:?}", a, b);
        }
    }

    /// The action clamp acts per component, so the dynamics are equivariant
    /// under quarter turns (not arbitrary rotations).
    #[test]
    fn quarter_turns_rotate_the_translation(turns in 0..4i32, ox in -0.3..0.3f64, oy in -0.3..0.3f64) {
        let base = make_environment(EnvConfig::planar_push()).unwrap();
        let actions = push_actions(&base, 60);
        let angle = std::f64::consts::FRAC_PI_2 * turns as f64;
        let rot = |v: [f64; 2]| match turns {
            0 => v,
            1 => [-v[1], v[0]],
            2 => [-v[0], -v[1]],
            _ => [v[1], -v[0]],
        };
        let mut cfg = EnvConfig::planar_push();
        cfg.base_pose = Pose2::new(ox, oy, angle);
        let r = rot(cfg.robot_start);
        cfg.robot_start = [r[0] + ox, r[1] + oy];
        let turned = make_environment(cfg).unwrap();
        let turned_actions = ActionSequence::new(actions.as_slice().iter().map(|a| rot(*a)).collect()).unwrap();
        let a = rollout_from_start(&base, &actions).achieved_change;
        let b = rollout_from_start(&turned, &turned_actions).achieved_change;
        let expect = rot([a[0], a[1]]);
        prop_assert!((b[0] - expect[0]).abs() < 1e-9 && (b[1] - expect[1]).abs() < 1e-9, "{:?} vs {:?}", b, expect);
        prop_assert!((b[2] - a[2]).abs() < 1e-9);
    }
}

/// Halving the step (and repeating each action twice) converges: successive
/// refinements change the outcome less and less.
#[test]
fn step_refinement_converges() {
    for kind in [EnvKind::PlanarPush, EnvKind::Revolute, EnvKind::Prismatic] {
        let coarse = make_environment(EnvConfig::default_for(kind)).unwrap();
        let actions = push_actions(&coarse, 60);
        let outcome = |factor: usize| {
            let mut cfg = EnvConfig::default_for(kind);
            cfg.physics.dt /= factor as f64;
            let env = make_environment(cfg).unwrap();
            let fine: Vec<Action> = actions
                .as_slice()
                .iter()
                .flat_map(|a| std::iter::repeat_n(*a, factor))
                .collect();
            let t = rollout_from_start(&env, &ActionSequence::new(fine).unwrap());
            match kind {
                EnvKind::PlanarPush => t.achieved_change,
                _ => TaskVector::new(vec![t.final_joint()]),
            }
        };
        let (a, b, c) = (outcome(1), outcome(2), outcome(4));
        let diff = |x: &TaskVector, y: &TaskVector| {
            x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (diff(&a, &b), diff(&b, &c));
        assert!(e2 < e1, "{}: {e1} then {e2}", kind.name());
        assert!(e1 < 0.02, "{}: coarse step error {e1}", kind.name());
    }
}

#[test]
fn a_push_moves_the_box_and_fixtures_open() {
    for kind in [EnvKind::PlanarPush, EnvKind::Revolute, EnvKind::Prismatic] {
        let env = make_environment(EnvConfig::default_for(kind)).unwrap();
        let t = rollout_from_start(&env, &push_actions(&env, 100));
        match kind {
            EnvKind::PlanarPush => assert!(t.achieved_change[0] > 0.1),
            _ => assert!(t.final_joint() > 0.5 * env.config().goal.joint_goal),
        }
    }
}
