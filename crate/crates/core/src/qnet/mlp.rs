//! A `d → h → h → 1` tanh perceptron with hand-written backpropagation and
//! an Adam optimizer over its flattened parameters.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mlp {
    dim: usize,
    hidden: usize,
    /// `[W1 (h×d), b1 (h), W2 (h×h), b2 (h), w3 (h), b3]`, row-major.
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
pub(crate) struct Activations {
    a1: Vec<f64>,
    a2: Vec<f64>,
}

impl Mlp {
    pub fn param_count(dim: usize, hidden: usize) -> usize {
        hidden * dim + hidden + hidden * hidden + hidden + hidden + 1
    }

    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    pub fn init<R: Rng + ?Sized>(dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut params = vec![0.0; Self::param_count(dim, hidden)];
        let mut fill = |range: core::ops::Range<usize>, fan_in: usize| {
            let bound = 1.0 / math::sqrt(fan_in as f64);
            for p in &mut params[range] {
                *p = rng.random_range(-bound..bound);
            }
        };
        let (w1, b1, w2, b2, w3, b3) = Self::layout(dim, hidden);
        fill(w1, dim);
        fill(b1, dim);
        fill(w2, hidden);
        fill(b2, hidden);
        fill(w3, hidden);
        fill(b3..b3 + 1, hidden);
        Mlp { dim, hidden, params }
    }

    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Mlp {
            dim,
            hidden,
            params: vec![0.0; Self::param_count(dim, hidden)],
        }
    }

    #[allow(clippy::type_complexity)]
    fn layout(
        d: usize,
        h: usize,
    ) -> (
        core::ops::Range<usize>,
        core::ops::Range<usize>,
        core::ops::Range<usize>,
        core::ops::Range<usize>,
        core::ops::Range<usize>,
        usize,
    ) {
        let w1 = 0..h * d;
        let b1 = w1.end..w1.end + h;
        let w2 = b1.end..b1.end + h * h;
        let b2 = w2.end..w2.end + h;
        let w3 = b2.end..b2.end + h;
        let b3 = w3.end;
        (w1, b1, w2, b2, w3, b3)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn forward_full(&self, z: &[f64]) -> (f64, Activations) {
        let (d, h) = (self.dim, self.hidden);
        let (w1, b1, w2, b2, w3, b3) = Self::layout(d, h);
        let p = &self.params;
        let a1: Vec<f64> = (0..h)
            .map(|i| {
                let row = &p[w1.start + i * d..w1.start + (i + 1) * d];
                let s: f64 = row.iter().zip(z).map(|(w, x)| w * x).sum();
                math::tanh(s + p[b1.start + i])
            })
            .collect();
        let a2: Vec<f64> = (0..h)
            .map(|i| {
                let row = &p[w2.start + i * h..w2.start + (i + 1) * h];
                let s: f64 = row.iter().zip(&a1).map(|(w, x)| w * x).sum();
                math::tanh(s + p[b2.start + i])
            })
            .collect();
        let out = p[w3].iter().zip(&a2).map(|(w, x)| w * x).sum::<f64>() + p[b3];
        (out, Activations { a1, a2 })
    }

    pub fn forward(&self, z: &[f64]) -> f64 {
        self.forward_full(z).0
    }

    /// Adds `g_out · ∂out/∂params` at input `z` into `grad`.
    pub(crate) fn accumulate_gradient(&self, z: &[f64], acts: &Activations, g_out: f64, grad: &mut [f64]) {
        let (d, h) = (self.dim, self.hidden);
        let (w1, b1, w2, b2, w3, b3) = Self::layout(d, h);
        let p = &self.params;
        grad[b3] += g_out;
        let mut delta2 = vec![0.0; h];
        for i in 0..h {
            grad[w3.start + i] += g_out * acts.a2[i];
            delta2[i] = g_out * p[w3.start + i] * (1.0 - acts.a2[i] * acts.a2[i]);
        }
        let mut back1 = vec![0.0; h];
        for i in 0..h {
            grad[b2.start + i] += delta2[i];
            let row = w2.start + i * h;
            for j in 0..h {
                grad[row + j] += delta2[i] * acts.a1[j];
                back1[j] += p[row + j] * delta2[i];
            }
        }
        for j in 0..h {
            let delta1 = back1[j] * (1.0 - acts.a1[j] * acts.a1[j]);
            grad[b1.start + j] += delta1;
            let row = w1.start + j * d;
            for k in 0..d {
                grad[row + k] += delta1 * z[k];
            }
        }
    }

    /// Product of the layers' Frobenius norms, a Lipschitz bound of the
    /// network in its (normalized) input.
    pub fn lipschitz_bound(&self) -> f64 {
        let (w1, _, w2, _, w3, _) = Self::layout(self.dim, self.hidden);
        let norm = |r: core::ops::Range<usize>| math::sqrt(self.params[r].iter().map(|v| v * v).sum());
        norm(w1) * norm(w2) * norm(w3)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Adam {
    pub lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    beta1_pow: f64,
    beta2_pow: f64,
    pub steps: u64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            beta1_pow: 1.0,
            beta2_pow: 1.0,
            steps: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.steps += 1;
        self.beta1_pow *= BETA1;
        self.beta2_pow *= BETA2;
        let c1 = 1.0 - self.beta1_pow;
        let c2 = 1.0 - self.beta2_pow;
        for i in 0..params.len() {
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * grad[i];
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (math::sqrt(v_hat) + EPS);
        }
    }
}
