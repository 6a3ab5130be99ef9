//! Define-by-run computation tape.
//!
//! Nodes are appended in execution order, so parents always precede children
//! and the reverse sweep visits a valid topological order. Every forward op
//! scans its output for non-finite values and fails fast naming itself; the
//! backward sweep does the same to gradients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::math;

use super::{ParamId, ParamSet, Tensor};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    /// Input or parameter leaf; `Some` links back to a [`ParamSet`] slot.
    Leaf(Option<ParamId>),
    Add(Var, Var),
    Sub(Var, Var),
    /// Hadamard product.
    Mul(Var, Var),
    Scale(Var, f64),
    /// `[m, n] x [n] -> [m]`.
    MatVec { w: Var, x: Var },
    /// Same-padded cross-correlation `[h, w, cin] * [kh, kw, cin, cout]`.
    Conv2d { x: Var, k: Var },
    /// Broadcasts a `[c]` bias over `[h, w, c]`.
    AddBias { x: Var, b: Var },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Sum(Var),
    Mean(Var),
    /// Elementwise multiply by a constant mask (dropout).
    MulMask(Var, Tensor),
    Reshape(Var),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf(_) => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::MatVec { .. } => "matvec",
            Op::Conv2d { .. } => "conv2d",
            Op::AddBias { .. } => "add_bias",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::MulMask(..) => "mul_mask",
            Op::Reshape(_) => "reshape",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Recorded forward pass; one per sample.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> CoreResult<Var> {
        if !value.is_finite() {
            return Err(CoreError::NonFinite { op: op.name() });
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Records an untracked input.
    pub fn constant(&mut self, value: Tensor) -> CoreResult<Var> {
        self.push(value, Op::Leaf(None))
    }

    /// Records a parameter leaf; `backward` will route its gradient into the
    /// owning [`ParamSet`].
    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> CoreResult<Var> {
        self.push(params.value(id).clone(), Op::Leaf(Some(id)))
    }

    fn binary_elementwise(
        &mut self,
        a: Var,
        b: Var,
        op_name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> CoreResult<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape() != tb.shape() {
            return Err(CoreError::ShapeMismatch {
                op: op_name,
                detail: format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            });
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| f(*x, *y))
            .collect();
        let value = Tensor {
            shape: ta.shape().to_vec(),
            data,
        };
        self.push(value, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> CoreResult<Var> {
        self.binary_elementwise(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> CoreResult<Var> {
        self.binary_elementwise(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> CoreResult<Var> {
        self.binary_elementwise(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> CoreResult<Var> {
        let value = Tensor {
            shape: self.nodes[a.0].value.shape().to_vec(),
            data: self.nodes[a.0].value.data().iter().map(|x| c * x).collect(),
        };
        self.push(value, Op::Scale(a, c))
    }

    /// Matrix-vector product: `w` is `[m, n]`, `x` is `[n]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> CoreResult<Var> {
        let (tw, tx) = (&self.nodes[w.0].value, &self.nodes[x.0].value);
        let (m, n) = match *tw.shape() {
            [m, n] => (m, n),
            _ => {
                return Err(CoreError::ShapeMismatch {
                    op: "matvec",
                    detail: format!("weight must be rank 2, got {:?}", tw.shape()),
                })
            }
        };
        if tx.len() != n {
            return Err(CoreError::ShapeMismatch {
                op: "matvec",
                detail: format!("[{m}, {n}] x [{}]", tx.len()),
            });
        }
        let mut out = vec![0.0; m];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &tw.data()[i * n..(i + 1) * n];
            *o = row.iter().zip(tx.data()).map(|(a, b)| a * b).sum();
        }
        let value = Tensor {
            shape: vec![m],
            data: out,
        };
        self.push(value, Op::MatVec { w, x })
    }

    /// Same-padded 2-D cross-correlation. Input `[h, w, cin]`, kernel
    /// `[kh, kw, cin, cout]` with odd spatial dims, output `[h, w, cout]`.
    pub fn conv2d_same(&mut self, x: Var, k: Var) -> CoreResult<Var> {
        let (tx, tk) = (&self.nodes[x.0].value, &self.nodes[k.0].value);
        let (h, w, cin) = match *tx.shape() {
            [h, w, c] => (h, w, c),
            _ => {
                return Err(CoreError::ShapeMismatch {
                    op: "conv2d",
                    detail: format!("input must be [h, w, c], got {:?}", tx.shape()),
                })
            }
        };
        let (kh, kw, kcin, cout) = match *tk.shape() {
            [kh, kw, kcin, cout] => (kh, kw, kcin, cout),
            _ => {
                return Err(CoreError::ShapeMismatch {
                    op: "conv2d",
                    detail: format!("kernel must be [kh, kw, cin, cout], got {:?}", tk.shape()),
                })
            }
        };
        if kcin != cin {
            return Err(CoreError::ShapeMismatch {
                op: "conv2d",
                detail: format!("input has {cin} channels, kernel expects {kcin}"),
            });
        }
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(CoreError::ShapeMismatch {
                op: "conv2d",
                detail: format!("kernel dims must be odd for same padding, got {kh}x{kw}"),
            });
        }
        let (rh, rw) = (kh / 2, kw / 2);
        let mut out = vec![0.0; h * w * cout];
        let xd = tx.data();
        let kd = tk.data();
        for i in 0..h {
            for j in 0..w {
                for di in 0..kh {
                    let si = i as isize + di as isize - rh as isize;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    for dj in 0..kw {
                        let sj = j as isize + dj as isize - rw as isize;
                        if sj < 0 || sj >= w as isize {
                            continue;
                        }
                        let x_base = ((si as usize) * w + sj as usize) * cin;
                        let k_base = (di * kw + dj) * cin * cout;
                        let o_base = (i * w + j) * cout;
                        for ci in 0..cin {
                            let xv = xd[x_base + ci];
                            let k_row = k_base + ci * cout;
                            for co in 0..cout {
                                out[o_base + co] += xv * kd[k_row + co];
                            }
                        }
                    }
                }
            }
        }
        let value = Tensor {
            shape: vec![h, w, cout],
            data: out,
        };
        self.push(value, Op::Conv2d { x, k })
    }

    /// Adds a per-channel bias `[c]` to an `[h, w, c]` tensor.
    pub fn add_bias(&mut self, x: Var, b: Var) -> CoreResult<Var> {
        let (tx, tb) = (&self.nodes[x.0].value, &self.nodes[b.0].value);
        let c = match *tx.shape() {
            [_, _, c] => c,
            _ => {
                return Err(CoreError::ShapeMismatch {
                    op: "add_bias",
                    detail: format!("input must be [h, w, c], got {:?}", tx.shape()),
                })
            }
        };
        if tb.len() != c {
            return Err(CoreError::ShapeMismatch {
                op: "add_bias",
                detail: format!("{c} channels, bias of {}", tb.len()),
            });
        }
        let data = tx
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| v + tb.data()[i % c])
            .collect();
        let value = Tensor {
            shape: tx.shape().to_vec(),
            data,
        };
        self.push(value, Op::AddBias { x, b })
    }

    fn unary(
        &mut self,
        a: Var,
        f: impl Fn(f64) -> f64,
        op: Op,
    ) -> CoreResult<Var> {
        let value = Tensor {
            shape: self.nodes[a.0].value.shape().to_vec(),
            data: self.nodes[a.0].value.data().iter().map(|&x| f(x)).collect(),
        };
        self.push(value, op)
    }

    pub fn sigmoid(&mut self, a: Var) -> CoreResult<Var> {
        self.unary(a, math::sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> CoreResult<Var> {
        self.unary(a, math::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> CoreResult<Var> {
        self.unary(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    pub fn sum(&mut self, a: Var) -> CoreResult<Var> {
        let s = self.nodes[a.0].value.data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> CoreResult<Var> {
        let t = &self.nodes[a.0].value;
        let m = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push(Tensor::scalar(m), Op::Mean(a))
    }

    /// Elementwise multiply by a fixed mask (dropout keeps/drops here).
    pub fn mul_mask(&mut self, a: Var, mask: Tensor) -> CoreResult<Var> {
        let ta = &self.nodes[a.0].value;
        if ta.shape() != mask.shape() {
            return Err(CoreError::ShapeMismatch {
                op: "mul_mask",
                detail: format!("{:?} vs {:?}", ta.shape(), mask.shape()),
            });
        }
        let data = ta
            .data()
            .iter()
            .zip(mask.data())
            .map(|(x, m)| x * m)
            .collect();
        let value = Tensor {
            shape: ta.shape().to_vec(),
            data,
        };
        self.push(value, Op::MulMask(a, mask))
    }

    /// Reinterprets the element order under a new shape (flattening).
    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> CoreResult<Var> {
        let ta = &self.nodes[a.0].value;
        let numel: usize = shape.iter().product();
        if numel != ta.len() {
            return Err(CoreError::ShapeMismatch {
                op: "reshape",
                detail: format!("{:?} -> {:?}", ta.shape(), shape),
            });
        }
        let value = Tensor {
            shape: shape.to_vec(),
            data: ta.data().to_vec(),
        };
        self.push(value, Op::Reshape(a))
    }

    /// Mean squared difference between two same-shape nodes, as a scalar.
    pub fn mse(&mut self, a: Var, b: Var) -> CoreResult<Var> {
        let d = self.sub(a, b)?;
        let sq = self.mul(d, d)?;
        self.mean(sq)
    }

    /// Reverse-mode sweep from a scalar `loss`. Gradients of parameter
    /// leaves are *added* into `params`; repeated calls accumulate.
    pub fn backward(&self, loss: Var, params: &mut ParamSet) -> CoreResult<()> {
        let loss_node = &self.nodes[loss.0];
        if loss_node.value.len() != 1 {
            return Err(CoreError::NotScalar {
                len: loss_node.value.len(),
            });
        }

        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .take(loss.0 + 1)
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        grads[loss.0][0] = 1.0;

        for id in (0..=loss.0).rev() {
            // Parents always precede children on the tape, so this node's
            // gradient is complete when we reach it.
            let (before, rest) = grads.split_at_mut(id);
            let g = &rest[0];
            let node = &self.nodes[id];
            if g.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::NonFinite { op: node.op.name() });
            }
            match &node.op {
                Op::Leaf(Some(pid)) => params.accumulate_grad(*pid, g),
                Op::Leaf(None) => {}
                Op::Add(a, b) => {
                    axpy(&mut before[a.0], g, 1.0);
                    axpy(&mut before[b.0], g, 1.0);
                }
                Op::Sub(a, b) => {
                    axpy(&mut before[a.0], g, 1.0);
                    axpy(&mut before[b.0], g, -1.0);
                }
                Op::Mul(a, b) => {
                    if a == b {
                        let va = self.nodes[a.0].value.data();
                        for (ga, (gi, x)) in
                            before[a.0].iter_mut().zip(g.iter().zip(va))
                        {
                            *ga += 2.0 * gi * x;
                        }
                    } else {
                        let (va, vb) =
                            (self.nodes[a.0].value.data(), self.nodes[b.0].value.data());
                        for ((ga, gi), y) in before[a.0].iter_mut().zip(g).zip(vb) {
                            *ga += gi * y;
                        }
                        for ((gb, gi), x) in before[b.0].iter_mut().zip(g).zip(va) {
                            *gb += gi * x;
                        }
                    }
                }
                Op::Scale(a, c) => axpy(&mut before[a.0], g, *c),
                Op::MatVec { w, x } => {
                    let (vw, vx) = (self.nodes[w.0].value.data(), self.nodes[x.0].value.data());
                    let n = vx.len();
                    if w == x {
                        // Only possible for a [1, n] matrix applied to itself.
                        for (i, gi) in g.iter().enumerate() {
                            for j in 0..n {
                                before[w.0][i * n + j] += gi * vx[j];
                            }
                        }
                        for (i, gi) in g.iter().enumerate() {
                            for j in 0..n {
                                before[w.0][j] += gi * vw[i * n + j];
                            }
                        }
                    } else {
                        for (i, gi) in g.iter().enumerate() {
                            let row = &vw[i * n..(i + 1) * n];
                            for j in 0..n {
                                before[w.0][i * n + j] += gi * vx[j];
                                before[x.0][j] += gi * row[j];
                            }
                        }
                    }
                }
                Op::Conv2d { x, k } => {
                    self.conv2d_backward(*x, *k, g, before);
                }
                Op::AddBias { x, b } => {
                    let c = self.nodes[b.0].value.len();
                    axpy(&mut before[x.0], g, 1.0);
                    for (i, gi) in g.iter().enumerate() {
                        before[b.0][i % c] += gi;
                    }
                }
                Op::Sigmoid(a) => {
                    let y = node.value.data();
                    for ((ga, gi), yi) in before[a.0].iter_mut().zip(g).zip(y) {
                        *ga += gi * yi * (1.0 - yi);
                    }
                }
                Op::Tanh(a) => {
                    let y = node.value.data();
                    for ((ga, gi), yi) in before[a.0].iter_mut().zip(g).zip(y) {
                        *ga += gi * (1.0 - yi * yi);
                    }
                }
                Op::Relu(a) => {
                    let x = self.nodes[a.0].value.data();
                    for ((ga, gi), xi) in before[a.0].iter_mut().zip(g).zip(x) {
                        if *xi > 0.0 {
                            *ga += gi;
                        }
                    }
                }
                Op::Sum(a) => axpy_scalar(&mut before[a.0], g[0]),
                Op::Mean(a) => {
                    let n = self.nodes[a.0].value.len() as f64;
                    axpy_scalar(&mut before[a.0], g[0] / n);
                }
                Op::MulMask(a, mask) => {
                    for ((ga, gi), m) in before[a.0].iter_mut().zip(g).zip(mask.data()) {
                        *ga += gi * m;
                    }
                }
                Op::Reshape(a) => axpy(&mut before[a.0], g, 1.0),
            }
        }
        Ok(())
    }

    fn conv2d_backward(&self, x: Var, k: Var, g: &[f64], before: &mut [Vec<f64>]) {
        let tx = &self.nodes[x.0].value;
        let tk = &self.nodes[k.0].value;
        let (h, w, cin) = (tx.shape()[0], tx.shape()[1], tx.shape()[2]);
        let (kh, kw, cout) = (tk.shape()[0], tk.shape()[1], tk.shape()[3]);
        let (rh, rw) = (kh / 2, kw / 2);
        let xd = tx.data();
        let kd = tk.data();
        // x and k are distinct nodes by construction (different shapes).
        let (gx_slot, gk_slot) = (x.0, k.0);
        for i in 0..h {
            for j in 0..w {
                let o_base = (i * w + j) * cout;
                for di in 0..kh {
                    let si = i as isize + di as isize - rh as isize;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    for dj in 0..kw {
                        let sj = j as isize + dj as isize - rw as isize;
                        if sj < 0 || sj >= w as isize {
                            continue;
                        }
                        let x_base = ((si as usize) * w + sj as usize) * cin;
                        let k_base = (di * kw + dj) * cin * cout;
                        for ci in 0..cin {
                            let xv = xd[x_base + ci];
                            let k_row = k_base + ci * cout;
                            let mut acc = 0.0;
                            for co in 0..cout {
                                let go = g[o_base + co];
                                acc += go * kd[k_row + co];
                                before[gk_slot][k_row + co] += go * xv;
                            }
                            before[gx_slot][x_base + ci] += acc;
                        }
                    }
                }
            }
        }
    }
}

fn axpy(dst: &mut [f64], src: &[f64], c: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

fn axpy_scalar(dst: &mut [f64], v: f64) {
    for d in dst.iter_mut() {
        *d += v;
    }
}
