use core::ops::{Add, Div, Mul, Neg, Sub};

use super::tape::Var;
use crate::math;

/// Scalar arithmetic shared by plain `f64` evaluation and taped evaluation.
///
/// Dynamics are written once against this trait. Both implementations route
/// values through [`crate::math`], so a taped rollout reproduces the plain
/// rollout bit for bit.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant living wherever `self` lives (same tape for [`Var`]).
    fn constant_like(&self, c: f64) -> Self;
    fn tanh(self) -> Self;
    fn softplus(self) -> Self;
    fn exp(self) -> Self;
    fn square(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn smooth_clamp(self, vmax: f64) -> Self;
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn tanh(self) -> Self {
        math::tanh(self)
    }
    fn softplus(self) -> Self {
        math::softplus(self)
    }
    fn exp(self) -> Self {
        math::exp(self)
    }
    fn square(self) -> Self {
        self * self
    }
    fn sqrt(self) -> Self {
        math::sqrt(self)
    }
    fn sin(self) -> Self {
        math::sin(self)
    }
    fn cos(self) -> Self {
        math::cos(self)
    }
    fn smooth_clamp(self, vmax: f64) -> Self {
        math::smooth_clamp(self, vmax)
    }
}

impl<'t> Real for Var<'t> {
    fn value(&self) -> f64 {
        Var::value(self)
    }
    fn constant_like(&self, c: f64) -> Self {
        self.tape().lift(c)
    }
    fn tanh(self) -> Self {
        Var::tanh(self)
    }
    fn softplus(self) -> Self {
        Var::softplus(self)
    }
    fn exp(self) -> Self {
        Var::exp(self)
    }
    fn square(self) -> Self {
        Var::square(self)
    }
    fn sqrt(self) -> Self {
        Var::sqrt(self)
    }
    fn sin(self) -> Self {
        Var::sin(self)
    }
    fn cos(self) -> Self {
        Var::cos(self)
    }
    fn smooth_clamp(self, vmax: f64) -> Self {
        Var::smooth_clamp(self, vmax)
    }
}
