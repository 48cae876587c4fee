use alloc::vec;

use super::geometry::{self, Pose2};
use super::state::ObjectState;
use crate::error::{Error, Result};
use crate::math;
use crate::task::{TaskMetric, TaskVector};

/// Environment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum EnvKind {
    /// A free box pushed on the table; the task is its pose change.
    PlanarPush,
    /// A hinged link (door, lid, clock hand).
    Revolute,
    /// A sliding link (drawer).
    Prismatic,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::PlanarPush => "planar-push",
            EnvKind::Revolute => "revolute-1dof",
            EnvKind::Prismatic => "prismatic-1dof",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Geometry {
    /// Half extents of the pushed box or moving link (m).
    pub half_extents: [f64; 2],
    /// Distance from the joint origin to the link center along the link (m).
    pub handle_offset: f64,
    pub pusher_radius: f64,
    /// Rounding radius of the body's corners (m), below the half extents.
    pub corner_radius: f64,
}

impl Geometry {
    /// Half extents and radius of the pusher-inflated body outline.
    pub fn inflated(&self) -> ([f64; 2], f64) {
        let r = self.corner_radius;
        ([self.half_extents[0] - r, self.half_extents[1] - r], self.pusher_radius + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Physics {
    /// Integration step (s).
    pub dt: f64,
    /// Box mass for planar push, link mass for prismatic (kg).
    pub mass: f64,
    /// Box inertia for planar push, link inertia about the hinge (kg m²).
    pub inertia: f64,
    /// Linear damping of the free box (kg/s).
    pub damping: f64,
    /// Angular damping of the free box (N m s).
    pub angular_damping: f64,
    /// Joint damping `b`.
    pub joint_damping: f64,
    /// Contact stiffness `k_c` (N/m).
    pub contact_stiffness: f64,
    /// Contact smoothing length `δ` (m).
    pub contact_smoothing: f64,
    /// Coulomb coefficient `μ`.
    pub friction: f64,
    /// Friction smoothing speed `v_ε` (m/s).
    pub friction_smoothing: f64,
    /// End-effector speed saturation (m/s).
    pub u_max: f64,
    /// Stiffness of the soft joint-limit wall.
    pub limit_stiffness: f64,
    /// Smoothing width of the soft joint-limit wall.
    pub limit_smoothing: f64,
}

/// What the task loss measures.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Goal {
    /// Weight on translation in the task-space norm (per m²).
    pub w_t: f64,
    /// Weight on rotation in the task-space norm (per rad²).
    pub w_r: f64,
    /// Weight on the squared joint error of fixture tasks.
    pub w_q: f64,
    /// Joint value a fixture task must reach (rad or m).
    pub joint_goal: f64,
}

/// Everything needed to build an [`Environment`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct EnvConfig {
    pub kind: EnvKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub geometry: Geometry,
    #[cfg_attr(feature = "serde", serde(default))]
    pub physics: Physics,
    /// Pose of the box (planar push) or fixture base in the source task.
    #[cfg_attr(feature = "serde", serde(default))]
    pub base_pose: Pose2,
    #[cfg_attr(feature = "serde", serde(default))]
    pub goal: Goal,
    /// Soft joint limits `[lo, hi]`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub joint_limits: [f64; 2],
    /// Initial end-effector position (m).
    #[cfg_attr(feature = "serde", serde(default))]
    pub robot_start: [f64; 2],
    /// Any end-effector farther than this from the origin is out of the
    /// workspace (m).
    #[cfg_attr(feature = "serde", serde(default))]
    pub workspace_radius: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            half_extents: [0.05, 0.05],
            handle_offset: 0.0,
            pusher_radius: 0.015,
            corner_radius: 0.0,
        }
    }
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            dt: 0.01,
            mass: 0.5,
            inertia: 0.05,
            damping: 2.0,
            angular_damping: 0.02,
            joint_damping: 0.5,
            contact_stiffness: 500.0,
            contact_smoothing: 0.005,
            friction: 0.5,
            friction_smoothing: 0.01,
            u_max: 0.5,
            limit_stiffness: 50.0,
            limit_smoothing: 0.01,
        }
    }
}

impl Default for Goal {
    fn default() -> Self {
        Goal {
            w_t: 1.0,
            w_r: 1.0,
            w_q: 1.0,
            joint_goal: 0.0,
        }
    }
}

impl EnvConfig {
    /// A box on the table, pushed from its left side.
    pub fn planar_push() -> Self {
        let half = [0.05, 0.05];
        let mass: f64 = 0.5;
        EnvConfig {
            kind: EnvKind::PlanarPush,
            geometry: Geometry {
                half_extents: half,
                handle_offset: 0.0,
                pusher_radius: 0.015,
                corner_radius: 0.035,
            },
            physics: Physics {
                mass,
                inertia: mass * 4.0 * (half[0] * half[0] + half[1] * half[1]) / 12.0,
                // grippier, smoother contact and a faster pusher keep sideways and
                // reversed pushes reachable by descent
                friction: 0.8,
                friction_smoothing: 0.05,
                angular_damping: 0.15,
                u_max: 1.5,
                ..Physics::default()
            },
            base_pose: Pose2::default(),
            goal: Goal::default(),
            joint_limits: [-1.0, 1.0],
            robot_start: [-0.08, 0.0],
            workspace_radius: 1.0,
        }
    }

    /// A door-like link hinged at the base origin and pushed on its face.
    pub fn revolute() -> Self {
        EnvConfig {
            kind: EnvKind::Revolute,
            geometry: Geometry {
                half_extents: [0.25, 0.04],
                handle_offset: 0.25,
                pusher_radius: 0.015,
                corner_radius: 0.0,
            },
            physics: Physics {
                inertia: 0.05,
                contact_smoothing: 0.01,
                ..Physics::default()
            },
            base_pose: Pose2::default(),
            goal: Goal {
                joint_goal: 0.5,
                ..Goal::default()
            },
            joint_limits: [-0.3, 1.8],
            robot_start: [0.45, -0.08],
            workspace_radius: 1.0,
        }
    }

    /// A drawer sliding along the base x axis, pushed on its back face.
    pub fn prismatic() -> Self {
        EnvConfig {
            kind: EnvKind::Prismatic,
            geometry: Geometry {
                half_extents: [0.05, 0.15],
                handle_offset: 0.0,
                pusher_radius: 0.015,
                corner_radius: 0.0,
            },
            physics: Physics {
                mass: 0.2,
                contact_smoothing: 0.01,
                ..Physics::default()
            },
            base_pose: Pose2::default(),
            goal: Goal {
                joint_goal: 0.15,
                ..Goal::default()
            },
            joint_limits: [-0.1, 0.4],
            robot_start: [-0.08, 0.0],
            workspace_radius: 1.0,
        }
    }

    pub fn default_for(kind: EnvKind) -> Self {
        match kind {
            EnvKind::PlanarPush => Self::planar_push(),
            EnvKind::Revolute => Self::revolute(),
            EnvKind::Prismatic => Self::prismatic(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        let g = &self.geometry;
        let positive = [
            ("physics.dt", p.dt, "time step must be positive"),
            ("physics.mass", p.mass, "mass must be positive"),
            ("physics.inertia", p.inertia, "inertia must be positive"),
            ("physics.contact_stiffness", p.contact_stiffness, "contact stiffness must be positive"),
            ("physics.contact_smoothing", p.contact_smoothing, "contact smoothing must be positive"),
            ("physics.friction_smoothing", p.friction_smoothing, "friction smoothing must be positive"),
            ("physics.u_max", p.u_max, "speed limit must be positive"),
            ("physics.limit_smoothing", p.limit_smoothing, "limit smoothing must be positive"),
            ("geometry.half_extents", g.half_extents[0].min(g.half_extents[1]), "half extents must be positive"),
            ("geometry.pusher_radius", g.pusher_radius, "pusher radius must be positive"),
            ("workspace_radius", self.workspace_radius, "workspace radius must be positive"),
            ("goal.w_t", self.goal.w_t, "norm weights must be positive"),
            ("goal.w_r", self.goal.w_r, "norm weights must be positive"),
            ("goal.w_q", self.goal.w_q, "joint weight must be positive"),
        ];
        for (field, value, message) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::config(field, message));
            }
        }
        let non_negative = [
            ("physics.friction", p.friction, "friction coefficient must be non-negative"),
            ("physics.damping", p.damping, "damping must be non-negative"),
            ("physics.angular_damping", p.angular_damping, "damping must be non-negative"),
            ("physics.joint_damping", p.joint_damping, "damping must be non-negative"),
            ("physics.limit_stiffness", p.limit_stiffness, "limit stiffness must be non-negative"),
            ("geometry.corner_radius", g.corner_radius, "corner radius must be non-negative"),
        ];
        for (field, value, message) in non_negative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::config(field, message));
            }
        }
        if g.corner_radius >= g.half_extents[0].min(g.half_extents[1]) {
            return Err(Error::config("geometry.corner_radius", "corner radius must be below the half extents"));
        }
        if !self.base_pose.is_finite() {
            return Err(Error::config("base_pose", "pose must be finite"));
        }
        if !(self.joint_limits[0] < self.joint_limits[1]) {
            return Err(Error::config("joint_limits", "lower limit must be below upper limit"));
        }
        if self.kind != EnvKind::PlanarPush
            && !(self.joint_limits[0] <= self.goal.joint_goal && self.goal.joint_goal <= self.joint_limits[1])
        {
            return Err(Error::config("goal.joint_goal", "joint goal must lie within the joint limits"));
        }
        if !(self.robot_start[0].is_finite() && self.robot_start[1].is_finite()) {
            return Err(Error::config("robot_start", "start position must be finite"));
        }
        Ok(())
    }
}

/// An immutable simulation environment for one sub-task instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    config: EnvConfig,
    /// Base pose of this instance; equals `config.base_pose` for the source.
    base: Pose2,
    metric: TaskMetric,
}

/// Task-space dimension of every environment kind.
pub const TASK_DIM: usize = 3;

/// Builds a validated environment for the source task.
pub fn make_environment(config: EnvConfig) -> Result<Environment> {
    config.validate()?;
    let metric = TaskMetric::planar(config.goal.w_t, config.goal.w_r)?;
    Ok(Environment {
        base: config.base_pose,
        config,
        metric,
    })
}

impl Environment {
    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn kind(&self) -> EnvKind {
        self.config.kind
    }

    pub fn physics(&self) -> &Physics {
        &self.config.physics
    }

    pub fn geometry(&self) -> &Geometry {
        &self.config.geometry
    }

    pub fn metric(&self) -> &TaskMetric {
        &self.metric
    }

    pub fn task_dim(&self) -> usize {
        TASK_DIM
    }

    /// Base pose of this instance.
    pub fn base(&self) -> Pose2 {
        self.base
    }

    pub fn source_base(&self) -> Pose2 {
        self.config.base_pose
    }

    /// Fixture kinds are parameterized by the base-pose offset from the
    /// source; planar push keeps one instance for every task point.
    pub fn is_fixture(&self) -> bool {
        self.config.kind != EnvKind::PlanarPush
    }

    /// The instance in which sub-task `x` is solved.
    pub fn instance(&self, x: &TaskVector) -> Result<Environment> {
        x.check_dim(TASK_DIM)?;
        if !x.is_finite() {
            return Err(Error::Usage("task vector must be finite".into()));
        }
        let mut env = self.clone();
        if self.is_fixture() {
            let s = self.config.base_pose;
            env.base = Pose2::new(s.x + x[0], s.y + x[1], s.phi + x[2]);
        }
        Ok(env)
    }

    /// Initial object state of this instance with the joint at `joint`.
    pub fn initial_object(&self, joint: f64) -> ObjectState {
        ObjectState {
            base: self.base,
            joint,
            base_vel: [0.0; 3],
            joint_vel: 0.0,
        }
    }

    /// World pose of the contact body (box or link) for object state `s_o`.
    pub fn body_pose(&self, s_o: &ObjectState) -> Pose2 {
        let b = s_o.base;
        match self.config.kind {
            EnvKind::PlanarPush => b,
            EnvKind::Revolute => {
                let phi = b.phi + s_o.joint;
                let c = b.transform_point([0.0, 0.0]);
                let (s, co) = (math::sin(phi), math::cos(phi));
                let off = self.config.geometry.handle_offset;
                Pose2::new(c[0] + co * off, c[1] + s * off, phi)
            }
            EnvKind::Prismatic => {
                let c = b.transform_point([self.config.geometry.handle_offset + s_o.joint, 0.0]);
                Pose2::new(c[0], c[1], b.phi)
            }
        }
    }

    /// World position of the handle (link center) in the closed configuration.
    pub fn handle_position(&self) -> [f64; 2] {
        let p = self.body_pose(&self.initial_object(0.0));
        [p.x, p.y]
    }

    /// Task-space embedding of a pose change between two object states.
    ///
    /// Planar push reports the box pose change. Fixture bases do not move
    /// during a rollout, so their change is measured from the source base.
    pub fn achieved_change(&self, first: &ObjectState, last: &ObjectState) -> TaskVector {
        let from = if self.is_fixture() {
            self.config.base_pose
        } else {
            first.base
        };
        TaskVector::new(vec![
            last.base.x - from.x,
            last.base.y - from.y,
            last.base.phi - from.phi,
        ])
    }
}

/// Signed distance from pusher center `p` to the contact surface of the body
/// in state `s_o`, inflated by the pusher radius; negative in penetration.
pub fn signed_distance(env: &Environment, p: [f64; 2], s_o: &ObjectState) -> f64 {
    let pose = env.body_pose(s_o);
    let (c, s) = (math::cos(pose.phi), math::sin(pose.phi));
    let local = geometry::to_local(p, [pose.x, pose.y], c, s);
    let g = env.geometry();
    let (half, radius) = g.inflated();
    geometry::rounded_box(local, half, radius).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for kind in [EnvKind::PlanarPush, EnvKind::Revolute, EnvKind::Prismatic] {
            let env = make_environment(EnvConfig::default_for(kind)).unwrap();
            assert_eq!(env.physics().dt, 0.01);
        }
    }

    #[test]
    fn negative_stiffness_is_rejected() {
        let mut cfg = EnvConfig::planar_push();
        cfg.physics.contact_stiffness = -1.0;
        match make_environment(cfg) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "physics.contact_stiffness");
                assert_eq!(message, "contact stiffness must be positive");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rotated_base_rotates_the_handle() {
        let mut cfg = EnvConfig::revolute();
        cfg.base_pose = Pose2::new(0.1, -0.2, 30f64.to_radians());
        let env = make_environment(cfg).unwrap();
        let h = env.handle_position();
        // hinge at (0.1, -0.2), handle 0.25 m along the 30° base axis
        let expected = [0.1 + 0.25 * 3f64.sqrt() / 2.0, -0.2 + 0.25 * 0.5];
        assert!((h[0] - expected[0]).abs() < 1e-12);
        assert!((h[1] - expected[1]).abs() < 1e-12);
    }

    #[test]
    fn instance_offsets_fixture_base_only() {
        let x = TaskVector::planar(0.1, 0.2, 0.3);
        let door = make_environment(EnvConfig::revolute()).unwrap();
        assert_eq!(door.instance(&x).unwrap().base(), Pose2::new(0.1, 0.2, 0.3));
        let push = make_environment(EnvConfig::planar_push()).unwrap();
        assert_eq!(push.instance(&x).unwrap().base(), Pose2::default());
        assert!(push.instance(&TaskVector::zeros(2)).is_err());
    }

    #[test]
    fn signed_distance_conventions() {
        let env = make_environment(EnvConfig::planar_push()).unwrap();
        let s_o = env.initial_object(0.0);
        let g = *env.geometry();
        let center = signed_distance(&env, [0.0, 0.0], &s_o);
        assert!((center + g.half_extents[0].min(g.half_extents[1]) + g.pusher_radius).abs() < 1e-15);
        let face = signed_distance(&env, [g.half_extents[0] + g.pusher_radius, 0.0], &s_o);
        assert!(face.abs() < 1e-15);
    }
}
