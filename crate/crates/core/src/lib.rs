//! Skill transfer between manipulation tasks by differentiable simulation.
//!
//! An action sequence that solves a source task is carried to a target task
//! along a path of nearby sub-tasks. Each hop is solved by gradient descent
//! through a smooth simulator ([`transfer`]); the path is grown by sampling
//! candidate sub-tasks and ranking them with a learned reward model
//! ([`planner`], [`qnet`]).
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autodiff;
pub mod baselines;
pub mod demo;
pub mod diffsim;
mod error;
pub mod math;
pub mod planner;
pub mod qnet;
pub mod rng;
pub mod task;
pub mod transfer;

pub use error::{Error, Result};
pub use task::{TaskMetric, TaskVector};
