//! Smooth penalty-contact dynamics, written once over [`Real`].
//!
//! The end-effector is kinematic: `q_r ← q_r + dt · smooth_clamp(u, u_max)`.
//! Contact pushes the body with `F_n = k_c δ softplus(−φ/δ)` along the inward
//! normal and drags it tangentially with `F_t = −μ F_n tanh(v_t / v_ε)`,
//! where `v_t` is the body-minus-pusher slip speed. Bodies follow damped
//! Newton/Euler equations integrated with semi-implicit Euler; the viscous
//! damping terms are taken implicitly.

use alloc::format;

use super::env::{EnvKind, Environment};
use super::geometry;
use super::state::{Action, ObjectState, RobotState, SimState};
use crate::autodiff::Real;
use crate::error::{Error, Result};

struct BodyFrame<S> {
    center: [S; 2],
    cos: S,
    sin: S,
}

pub(crate) struct Contact<S> {
    pub distance: S,
    pub point: [S; 2],
    pub normal_force: S,
    pub tangential_force: S,
    pub force: [S; 2],
}

fn body_frame<S: Real>(env: &Environment, st: &SimState<S>) -> BodyFrame<S> {
    let off = env.geometry().handle_offset;
    match env.kind() {
        EnvKind::PlanarPush => BodyFrame {
            center: [st.base[0], st.base[1]],
            cos: st.base[2].cos(),
            sin: st.base[2].sin(),
        },
        EnvKind::Revolute => {
            let angle = st.base[2] + st.joint;
            let (cos, sin) = (angle.cos(), angle.sin());
            BodyFrame {
                center: [st.base[0] + cos * off, st.base[1] + sin * off],
                cos,
                sin,
            }
        }
        EnvKind::Prismatic => {
            let (cos, sin) = (st.base[2].cos(), st.base[2].sin());
            let along = st.joint + off;
            BodyFrame {
                center: [st.base[0] + cos * along, st.base[1] + sin * along],
                cos,
                sin,
            }
        }
    }
}

/// Velocity of the body material point at `p`.
fn body_point_velocity<S: Real>(env: &Environment, st: &SimState<S>, frame: &BodyFrame<S>, p: [S; 2]) -> [S; 2] {
    match env.kind() {
        EnvKind::PlanarPush => {
            let r = [p[0] - frame.center[0], p[1] - frame.center[1]];
            let w = st.base_vel[2];
            [st.base_vel[0] - w * r[1], st.base_vel[1] + w * r[0]]
        }
        EnvKind::Revolute => {
            let r = [p[0] - st.base[0], p[1] - st.base[1]];
            [-(st.joint_vel * r[1]), st.joint_vel * r[0]]
        }
        EnvKind::Prismatic => [st.joint_vel * frame.cos, st.joint_vel * frame.sin],
    }
}

fn contact<S: Real>(env: &Environment, st: &SimState<S>, frame: &BodyFrame<S>, q_r: [S; 2], v_r: [S; 2]) -> Contact<S> {
    let g = env.geometry();
    let p = env.physics();
    let local = geometry::to_local(q_r, frame.center, frame.cos, frame.sin);
    let (half, radius) = g.inflated();
    let (distance, n_local) = geometry::rounded_box(local, half, radius);
    let n = geometry::rotate(n_local, frame.cos, frame.sin);
    let depth = distance + g.pusher_radius;
    let point = [q_r[0] - n[0] * depth, q_r[1] - n[1] * depth];

    let normal_force = (-distance / p.contact_smoothing).softplus() * (p.contact_stiffness * p.contact_smoothing);
    let v_body = body_point_velocity(env, st, frame, point);
    let tangent = [-n[1], n[0]];
    let slip = (v_body[0] - v_r[0]) * tangent[0] + (v_body[1] - v_r[1]) * tangent[1];
    let tangential_force = -(normal_force * p.friction) * (slip / p.friction_smoothing).tanh();
    let force = [
        tangent[0] * tangential_force - n[0] * normal_force,
        tangent[1] * tangential_force - n[1] * normal_force,
    ];
    Contact {
        distance,
        point,
        normal_force,
        tangential_force,
        force,
    }
}

fn limit_force<S: Real>(env: &Environment, q: S) -> S {
    let p = env.physics();
    let [lo, hi] = env.config().joint_limits;
    let w = p.limit_smoothing;
    ((-q + lo) / w).softplus() * (p.limit_stiffness * w) - ((q - hi) / w).softplus() * (p.limit_stiffness * w)
}

/// One semi-implicit Euler step.
pub(crate) fn advance<S: Real>(env: &Environment, st: &SimState<S>, u: [S; 2]) -> SimState<S> {
    let p = env.physics();
    let dt = p.dt;
    let v_r = [u[0].smooth_clamp(p.u_max), u[1].smooth_clamp(p.u_max)];
    let q_r = [st.q_r[0] + v_r[0] * dt, st.q_r[1] + v_r[1] * dt];
    let frame = body_frame(env, st);
    let c = contact(env, st, &frame, q_r, v_r);
    let f = c.force;

    let mut next = SimState { q_r, v_r, ..*st };
    match env.kind() {
        EnvKind::PlanarPush => {
            let r = [c.point[0] - frame.center[0], c.point[1] - frame.center[1]];
            let torque = r[0] * f[1] - r[1] * f[0];
            let lin = dt / p.mass;
            let keep = 1.0 / (1.0 + p.damping * lin);
            let spin = dt / p.inertia;
            let vx = (st.base_vel[0] + f[0] * lin) * keep;
            let vy = (st.base_vel[1] + f[1] * lin) * keep;
            let w = (st.base_vel[2] + torque * spin) * (1.0 / (1.0 + p.angular_damping * spin));
            next.base_vel = [vx, vy, w];
            next.base = [st.base[0] + vx * dt, st.base[1] + vy * dt, st.base[2] + w * dt];
        }
        EnvKind::Revolute => {
            let r = [c.point[0] - st.base[0], c.point[1] - st.base[1]];
            let torque = r[0] * f[1] - r[1] * f[0] + limit_force(env, st.joint);
            let spin = dt / p.inertia;
            let qd = (st.joint_vel + torque * spin) * (1.0 / (1.0 + p.joint_damping * spin));
            next.joint_vel = qd;
            next.joint = st.joint + qd * dt;
        }
        EnvKind::Prismatic => {
            let along = f[0] * frame.cos + f[1] * frame.sin + limit_force(env, st.joint);
            let lin = dt / p.mass;
            let qd = (st.joint_vel + along * lin) * (1.0 / (1.0 + p.joint_damping * lin));
            next.joint_vel = qd;
            next.joint = st.joint + qd * dt;
        }
    }
    next
}

/// Advances the robot and object by one step under action `a`.
pub fn step(env: &Environment, s_r: &RobotState, s_o: &ObjectState, a: &Action) -> Result<(RobotState, ObjectState)> {
    let st = SimState::from_states(s_r, s_o, |x| x);
    let next = advance(env, &st, *a);
    if !next.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite state after step from robot {:?}, object {:?}, action {:?}",
            s_r, s_o, a
        )));
    }
    Ok((next.robot(), next.object()))
}

/// Contact quantities produced while stepping with action `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactReport {
    pub signed_distance: f64,
    pub normal_force: f64,
    /// Signed tangential force along the contact tangent.
    pub tangential_force: f64,
    /// Total force on the body (world frame).
    pub force: [f64; 2],
}

/// The contact evaluated inside [`step`] for the same inputs.
pub fn contact_report(env: &Environment, s_r: &RobotState, s_o: &ObjectState, a: &Action) -> ContactReport {
    let p = env.physics();
    let st = SimState::from_states(s_r, s_o, |x| x);
    let v_r = [a[0].smooth_clamp(p.u_max), a[1].smooth_clamp(p.u_max)];
    let q_r = [st.q_r[0] + v_r[0] * p.dt, st.q_r[1] + v_r[1] * p.dt];
    let frame = body_frame(env, &st);
    let c = contact(env, &st, &frame, q_r, v_r);
    ContactReport {
        signed_distance: c.distance,
        normal_force: c.normal_force,
        tangential_force: c.tangential_force,
        force: c.force,
    }
}
