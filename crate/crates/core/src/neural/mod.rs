//! Minimal reverse-mode automatic differentiation with the dense and
//! convolutional primitives needed by the forecasters.
//!
//! The engine is define-by-run: each forward pass records tensor-valued
//! nodes on a [`Tape`], and [`Tape::backward`] sweeps the record in reverse,
//! accumulating gradients into the [`ParamSet`] that owns the learnable
//! parameters. Everything is `f64` on a single thread; identical seeds and
//! inputs reproduce bit-identical values and gradients.

mod adam;
mod cells;
pub mod gradcheck;
mod tape;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use cells::{ConvLstmCell, ConvLstmVars, LstmCell, LstmVars};
pub use tape::{Tape, Var};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};

/// Dense row-major tensor of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> CoreResult<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(CoreError::ShapeMismatch {
                op: "tensor",
                detail: format!("shape {shape:?} holds {numel} values, got {}", data.len()),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Handle to one parameter tensor inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// Named learnable parameters with persistent gradient accumulators.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Tensor>,
    grads: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> ParamId {
        let id = ParamId(self.values.len());
        self.grads.push(Tensor::zeros(value.shape()));
        self.values.push(value);
        self.names.push(name.to_string());
        id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    /// Iterates `(name, value)` pairs in creation order; the checkpoint
    /// format serializes exactly this sequence.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.values.iter())
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    /// Replaces every parameter value, matching by position and shape.
    pub fn load_values(&mut self, values: &[Tensor]) -> CoreResult<()> {
        if values.len() != self.values.len() {
            return Err(CoreError::ShapeMismatch {
                op: "load_values",
                detail: format!(
                    "{} tensors for {} parameters",
                    values.len(),
                    self.values.len()
                ),
            });
        }
        for (slot, v) in self.values.iter_mut().zip(values) {
            if slot.shape() != v.shape() {
                return Err(CoreError::ShapeMismatch {
                    op: "load_values",
                    detail: format!("expected {:?}, got {:?}", slot.shape(), v.shape()),
                });
            }
            slot.data.copy_from_slice(v.data());
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.data.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn scale_grads(&mut self, s: f64) {
        for g in &mut self.grads {
            g.data.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// L2 weight decay folded into the gradient: `g += wd * value`.
    pub fn apply_weight_decay(&mut self, wd: f64) {
        if wd == 0.0 {
            return;
        }
        for (g, v) in self.grads.iter_mut().zip(&self.values) {
            for (gi, vi) in g.data.iter_mut().zip(&v.data) {
                *gi += wd * vi;
            }
        }
    }

    pub fn snapshot(&self) -> Vec<Tensor> {
        self.values.clone()
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, delta: &[f64]) {
        for (g, d) in self.grads[id.0].data.iter_mut().zip(delta) {
            *g += d;
        }
    }
}
