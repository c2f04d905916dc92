//! AdamW with decoupled weight decay, updating trainable tensors only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParameterStore;
use crate::tensor::Element;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 2e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return bad("eps must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be finite and >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Moments<E> {
    m: Vec<E>,
    v: Vec<E>,
}

/// Optimizer state: first and second moments per trainable parameter id.
#[derive(Debug, Clone)]
pub struct AdamW<E: Element = f32> {
    config: AdamWConfig,
    t: u64,
    state: BTreeMap<usize, Moments<E>>,
}

impl<E: Element> AdamW<E> {
    pub fn new(config: AdamWConfig) -> Self {
        AdamW {
            config,
            t: 0,
            state: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.config
    }

    /// Number of completed steps.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Ids of the parameters that currently hold moment buffers.
    pub fn tracked(&self) -> impl Iterator<Item = usize> + '_ {
        self.state.keys().copied()
    }

    /// One AdamW update of every trainable tensor from its accumulated
    /// gradient:
    ///
    /// ```text
    /// m ← β₁m + (1−β₁)g        v ← β₂v + (1−β₂)g²
    /// θ ← θ − α·(m̂/(√v̂ + ε) + λθ)
    /// ```
    ///
    /// A trainable tensor without a gradient accumulator is an error; a
    /// zeroed accumulator is a legitimate all-zero gradient.
    pub fn step(&mut self, params: &mut ParameterStore<E>) -> Result<()> {
        for id in 0..params.len() {
            let p = params.param(id);
            if p.tensor.requires_grad() && p.tensor.grad().is_none() {
                return Err(Error::MissingGradient(p.name.clone()));
            }
        }
        self.state.retain(|&id, _| params.param(id).tensor.requires_grad());
        self.t += 1;

        let c = self.config;
        let (b1, b2) = (E::of(c.beta1), E::of(c.beta2));
        let (one_b1, one_b2) = (E::of(1.0 - c.beta1), E::of(1.0 - c.beta2));
        let bc1 = E::of(1.0 - c.beta1.powi(self.t as i32));
        let bc2 = E::of(1.0 - c.beta2.powi(self.t as i32));
        let (lr, eps, wd) = (E::of(c.lr), E::of(c.eps), E::of(c.weight_decay));

        for id in 0..params.len() {
            let tensor = &mut params.param_mut(id).tensor;
            if !tensor.requires_grad() {
                continue;
            }
            let n = tensor.numel();
            let moments = self.state.entry(id).or_insert_with(|| Moments {
                m: vec![E::zero(); n],
                v: vec![E::zero(); n],
            });
            let (theta, grad) = tensor.data_and_grad_mut();
            let grad = grad.expect("checked above");
            for i in 0..n {
                let g = grad[i];
                let m = b1 * moments.m[i] + one_b1 * g;
                let v = b2 * moments.v[i] + one_b2 * g * g;
                moments.m[i] = m;
                moments.v[i] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                theta[i] -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * theta[i]);
            }
        }
        Ok(())
    }
}

/// Resets the gradient accumulator of every trainable tensor to zeros.
pub fn zero_grad<E: Element>(params: &mut ParameterStore<E>) {
    for p in params.iter_mut() {
        p.tensor.zero_grad();
    }
}
