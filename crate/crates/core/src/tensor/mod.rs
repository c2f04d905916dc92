//! Dense row-major tensors and a recorded tape for reverse-mode
//! differentiation.
//!
//! A [`Tensor`] is a leaf: a parameter or an input. Computation happens on a
//! [`Tape`], which records every operation executed during one forward pass
//! and replays the records in reverse from a scalar loss. Operations whose
//! inputs all have `requires_grad == false` are recorded as constants, so no
//! backward work is ever spent on purely frozen subgraphs.

mod element;
mod tape;

pub use element::Element;
pub use tape::{Gradients, Tape, Var};

use std::sync::Arc;

use crate::error::{Error, Result};

/// A dense tensor with an optional gradient accumulator.
///
/// `data` is shared copy-on-write so a tape can hold a parameter's values
/// without copying them; optimizer updates happen after the tape is dropped.
#[derive(Clone, Debug)]
pub struct Tensor<E: Element = f32> {
    shape: Vec<usize>,
    data: Arc<Vec<E>>,
    requires_grad: bool,
    grad: Option<Vec<E>>,
}

impl<E: Element> Tensor<E> {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<E>) -> Result<Self> {
        let shape = shape.into();
        check_shape("tensor", &shape)?;
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::InvalidShape {
                op: "tensor",
                shape,
                reason: format!("{} elements supplied", data.len()),
            });
        }
        Ok(Tensor {
            shape,
            data: Arc::new(data),
            requires_grad: false,
            grad: None,
        })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = shape.into();
        let numel = shape.iter().product();
        Self::new(shape, vec![E::zero(); numel])
    }

    pub fn filled(shape: impl Into<Vec<usize>>, value: E) -> Result<Self> {
        let shape = shape.into();
        let numel = shape.iter().product();
        Self::new(shape, vec![value; numel])
    }

    /// Builds a tensor from `f64` values, converting to the element type.
    pub fn from_f64(shape: impl Into<Vec<usize>>, values: &[f64]) -> Result<Self> {
        Self::new(shape, values.iter().map(|&v| E::of(v)).collect())
    }

    /// Marks this tensor as trainable. Turning gradients off drops any
    /// existing accumulator.
    pub fn with_requires_grad(mut self, requires_grad: bool) -> Self {
        self.set_requires_grad(requires_grad);
        self
    }

    pub fn set_requires_grad(&mut self, requires_grad: bool) {
        self.requires_grad = requires_grad;
        if !requires_grad {
            self.grad = None;
        }
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub(crate) fn shared_data(&self) -> Arc<Vec<E>> {
        Arc::clone(&self.data)
    }

    /// Mutable access to the values. Copies only if a tape still shares them.
    pub fn data_mut(&mut self) -> &mut [E] {
        Arc::<Vec<E>>::make_mut(&mut self.data).as_mut_slice()
    }

    pub fn grad(&self) -> Option<&[E]> {
        self.grad.as_deref()
    }

    /// Values and gradient together, for optimizer updates.
    pub(crate) fn data_and_grad_mut(&mut self) -> (&mut [E], Option<&[E]>) {
        (Arc::<Vec<E>>::make_mut(&mut self.data).as_mut_slice(), self.grad.as_deref())
    }

    /// Resets the accumulator to zeros (allocating it if absent). No-op for
    /// tensors that do not require gradients.
    pub fn zero_grad(&mut self) {
        if !self.requires_grad {
            return;
        }
        match &mut self.grad {
            Some(g) => g.iter_mut().for_each(|v| *v = E::zero()),
            None => self.grad = Some(vec![E::zero(); self.data.len()]),
        }
    }

    /// Adds `grad` into the accumulator.
    pub fn accumulate_grad(&mut self, grad: &[E]) -> Result<()> {
        if !self.requires_grad {
            return Err(Error::GradientOnFrozen);
        }
        if grad.len() != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "accumulate_grad",
                lhs: self.shape.clone(),
                rhs: vec![grad.len()],
            });
        }
        match &mut self.grad {
            Some(acc) => acc.iter_mut().zip(grad).for_each(|(a, &g)| *a += g),
            None => self.grad = Some(grad.to_vec()),
        }
        Ok(())
    }

    /// Same tensor with the last two axes collapsed into rows: `[..., n]`
    /// viewed as `[rows, n]`.
    pub fn rows(&self) -> usize {
        self.data.len() / self.shape.last().copied().unwrap_or(1)
    }

    pub fn cast<F: Element>(&self) -> Tensor<F> {
        Tensor {
            shape: self.shape.clone(),
            data: Arc::new(self.data.iter().map(|v| F::of(v.as_f64())).collect()),
            requires_grad: self.requires_grad,
            grad: self
                .grad
                .as_ref()
                .map(|g| g.iter().map(|v| F::of(v.as_f64())).collect()),
        }
    }
}

pub(crate) fn check_shape(op: &'static str, shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::InvalidShape {
            op,
            shape: shape.to_vec(),
            reason: "extents must be positive and rank at least 1".into(),
        });
    }
    Ok(())
}
