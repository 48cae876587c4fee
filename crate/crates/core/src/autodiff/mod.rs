//! Reverse-mode automatic differentiation over scalar graphs, plus a
//! central-difference oracle.

mod fd;
mod scalar;
mod tape;

pub use fd::finite_difference_gradient;
pub use scalar::Real;
pub use tape::{Node, Op, Tape, Var};
