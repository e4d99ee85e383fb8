//! Reverse-mode differentiation over dense tensors.
//!
//! A [`Tape`] records every forward operation in topological order; [`Tape::backward`]
//! walks it in exact reverse and accumulates gradients into the [`Parameter`]s that
//! participated. One tape serves one forward pass; both encoder branches share a tape
//! so shared weights collect gradients from both.

use crate::tensor::{self, Tensor, TensorError, COSINE_EPS};
use std::cell::{Ref, RefCell, RefMut};
use std::rc::Rc;

/// A trainable tensor with its gradient accumulator and Adam moment state.
#[derive(Debug)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    adam_m: Tensor,
    adam_v: Tensor,
    step_count: u64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let (r, c) = value.shape();
        Parameter {
            name: name.into(),
            value,
            grad: Tensor::zeros(r, c),
            adam_m: Tensor::zeros(r, c),
            adam_v: Tensor::zeros(r, c),
            step_count: 0,
        }
    }
}

/// Shared handle to a [`Parameter`]; a training context clones these freely.
#[derive(Debug, Clone)]
pub struct ParamRef(Rc<RefCell<Parameter>>);

impl ParamRef {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        ParamRef(Rc::new(RefCell::new(Parameter::new(name, value))))
    }

    pub fn borrow(&self) -> Ref<'_, Parameter> {
        self.0.borrow()
    }

    pub fn borrow_mut(&self) -> RefMut<'_, Parameter> {
        self.0.borrow_mut()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.borrow().value.shape()
    }

    pub fn name(&self) -> String {
        self.borrow().name.clone()
    }

    pub fn value(&self) -> Tensor {
        self.borrow().value.clone()
    }

    pub fn zero_grad(&self) {
        let mut p = self.borrow_mut();
        let (r, c) = p.value.shape();
        p.grad = Tensor::zeros(r, c);
    }

    fn ptr_id(&self) -> usize {
        Rc::as_ptr(&self.0) as usize
    }
}

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Value(usize);

enum Op {
    Leaf,
    Param(ParamRef),
    Matmul(Value, Value),
    Transpose(Value),
    Add(Value, Value),
    Sub(Value, Value),
    MulElem(Value, Value),
    Scale(Value, f64),
    AddBias(Value, Value),
    Relu(Value),
    Exp(Value),
    Ln(Value),
    RowSums(Value),
    Diag(Value),
    MeanAll(Value),
    SumAll(Value),
    ScatterSum(Value, Rc<Vec<(usize, usize)>>),
    SegmentSum(Value, Rc<Vec<usize>>),
    SegmentMean(Value, Rc<Vec<usize>>, usize),
    GatherRows(Value, Rc<Vec<usize>>),
    CosineSim(Value, Value),
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Operation record for one forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_leaves: Vec<(usize, usize)>, // (param ptr id, node index)
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Value {
        debug_assert!(value.all_finite(), "non-finite tensor produced on tape");
        self.nodes.push(Node { value, op });
        Value(self.nodes.len() - 1)
    }

    /// Places a constant or input tensor on the tape; no gradient is kept for it.
    pub fn constant(&mut self, t: Tensor) -> Value {
        self.push(t, Op::Leaf)
    }

    /// Places a parameter on the tape, reusing the leaf if it is already present
    /// so both encoder branches point at one node.
    pub fn param(&mut self, p: &ParamRef) -> Value {
        let id = p.ptr_id();
        if let Some(&(_, node)) = self.param_leaves.iter().find(|(pid, _)| *pid == id) {
            return Value(node);
        }
        let v = self.push(p.value(), Op::Param(p.clone()));
        self.param_leaves.push((id, v.0));
        v
    }

    pub fn value(&self, v: Value) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Value) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Reads a 1×1 node as `f64`.
    pub fn scalar(&self, v: Value) -> Result<f64, TensorError> {
        self.nodes[v.0].value.scalar()
    }

    pub fn matmul(&mut self, a: Value, b: Value) -> Result<Value, TensorError> {
        let out = self.nodes[a.0].value.matmul(&self.nodes[b.0].value)?;
        Ok(self.push(out, Op::Matmul(a, b)))
    }

    pub fn transpose(&mut self, x: Value) -> Value {
        let out = self.nodes[x.0].value.transpose();
        self.push(out, Op::Transpose(x))
    }

    pub fn add(&mut self, a: Value, b: Value) -> Result<Value, TensorError> {
        let out = self.nodes[a.0].value.add(&self.nodes[b.0].value)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Value, b: Value) -> Result<Value, TensorError> {
        let out = self.nodes[a.0].value.sub(&self.nodes[b.0].value)?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul_elem(&mut self, a: Value, b: Value) -> Result<Value, TensorError> {
        let out = self.nodes[a.0].value.mul_elem(&self.nodes[b.0].value)?;
        Ok(self.push(out, Op::MulElem(a, b)))
    }

    pub fn scale(&mut self, x: Value, c: f64) -> Value {
        let out = self.nodes[x.0].value.scale(c);
        self.push(out, Op::Scale(x, c))
    }

    pub fn add_bias(&mut self, x: Value, bias: Value) -> Result<Value, TensorError> {
        let out = self.nodes[x.0].value.add_bias(&self.nodes[bias.0].value)?;
        Ok(self.push(out, Op::AddBias(x, bias)))
    }

    pub fn relu(&mut self, x: Value) -> Value {
        let out = self.nodes[x.0].value.relu();
        self.push(out, Op::Relu(x))
    }

    pub fn exp(&mut self, x: Value) -> Value {
        let out = self.nodes[x.0].value.exp();
        self.push(out, Op::Exp(x))
    }

    pub fn ln(&mut self, x: Value) -> Value {
        let out = self.nodes[x.0].value.ln();
        self.push(out, Op::Ln(x))
    }

    pub fn row_sums(&mut self, x: Value) -> Value {
        let out = self.nodes[x.0].value.row_sums();
        self.push(out, Op::RowSums(x))
    }

    pub fn diag(&mut self, x: Value) -> Result<Value, TensorError> {
        let out = self.nodes[x.0].value.diag()?;
        Ok(self.push(out, Op::Diag(x)))
    }

    pub fn mean_all(&mut self, x: Value) -> Value {
        let out = Tensor::filled(1, 1, self.nodes[x.0].value.mean());
        self.push(out, Op::MeanAll(x))
    }

    pub fn sum_all(&mut self, x: Value) -> Value {
        let out = Tensor::filled(1, 1, self.nodes[x.0].value.sum());
        self.push(out, Op::SumAll(x))
    }

    pub fn scatter_sum(&mut self, x: Value, edges: &[(usize, usize)]) -> Result<Value, TensorError> {
        let out = tensor::scatter_sum(&self.nodes[x.0].value, edges)?;
        Ok(self.push(out, Op::ScatterSum(x, Rc::new(edges.to_vec()))))
    }

    pub fn segment_sum(&mut self, x: Value, ids: &[usize], segments: usize) -> Result<Value, TensorError> {
        let out = tensor::segment_sum(&self.nodes[x.0].value, ids, segments)?;
        Ok(self.push(out, Op::SegmentSum(x, Rc::new(ids.to_vec()))))
    }

    pub fn segment_mean(&mut self, x: Value, ids: &[usize], segments: usize) -> Result<Value, TensorError> {
        let out = tensor::segment_mean(&self.nodes[x.0].value, ids, segments)?;
        Ok(self.push(out, Op::SegmentMean(x, Rc::new(ids.to_vec()), segments)))
    }

    pub fn gather_rows(&mut self, x: Value, idx: &[usize]) -> Result<Value, TensorError> {
        let out = tensor::gather_rows(&self.nodes[x.0].value, idx)?;
        Ok(self.push(out, Op::GatherRows(x, Rc::new(idx.to_vec()))))
    }

    pub fn cosine_sim(&mut self, a: Value, b: Value) -> Result<Value, TensorError> {
        let out = tensor::cosine_sim_matrix(&self.nodes[a.0].value, &self.nodes[b.0].value)?;
        Ok(self.push(out, Op::CosineSim(a, b)))
    }

    /// Runs reverse-mode accumulation from a scalar loss node. Parameter leaves
    /// receive `∂loss/∂value` in their `grad`; intermediate gradients are dropped.
    pub fn backward(&mut self, loss: Value) -> Result<(), TensorError> {
        if self.shape(loss) != (1, 1) {
            return Err(TensorError::NotScalar(self.shape(loss)));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::filled(1, 1, 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Leaf => {}
                Op::Param(p) => {
                    let mut p = p.borrow_mut();
                    p.grad = p.grad.add(&g)?;
                }
                Op::Matmul(a, b) => {
                    let ga = g.matmul(&self.nodes[b.0].value.transpose())?;
                    let gb = self.nodes[a.0].value.transpose().matmul(&g)?;
                    accumulate(&mut grads, a.0, ga)?;
                    accumulate(&mut grads, b.0, gb)?;
                }
                Op::Transpose(x) => {
                    accumulate(&mut grads, x.0, g.transpose())?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, a.0, g.clone())?;
                    accumulate(&mut grads, b.0, g)?;
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, a.0, g.clone())?;
                    accumulate(&mut grads, b.0, g.scale(-1.0))?;
                }
                Op::MulElem(a, b) => {
                    let ga = g.mul_elem(&self.nodes[b.0].value)?;
                    let gb = g.mul_elem(&self.nodes[a.0].value)?;
                    accumulate(&mut grads, a.0, ga)?;
                    accumulate(&mut grads, b.0, gb)?;
                }
                Op::Scale(x, c) => {
                    accumulate(&mut grads, x.0, g.scale(*c))?;
                }
                Op::AddBias(x, bias) => {
                    accumulate(&mut grads, bias.0, g.col_sums())?;
                    accumulate(&mut grads, x.0, g)?;
                }
                Op::Relu(x) => {
                    let mask = self.nodes[x.0].value.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    accumulate(&mut grads, x.0, g.mul_elem(&mask)?)?;
                }
                Op::Exp(x) => {
                    // d exp(x) = exp(x) dx; the node value is exp(x)
                    accumulate(&mut grads, x.0, g.mul_elem(&self.nodes[i].value)?)?;
                }
                Op::Ln(x) => {
                    let inv = self.nodes[x.0].value.map(|v| 1.0 / v);
                    accumulate(&mut grads, x.0, g.mul_elem(&inv)?)?;
                }
                Op::RowSums(x) => {
                    let (r, c) = self.nodes[x.0].value.shape();
                    let mut gx = Tensor::zeros(r, c);
                    for row in 0..r {
                        let gv = g.get(row, 0);
                        for v in gx.row_mut(row) {
                            *v = gv;
                        }
                    }
                    accumulate(&mut grads, x.0, gx)?;
                }
                Op::Diag(x) => {
                    let (r, c) = self.nodes[x.0].value.shape();
                    let mut gx = Tensor::zeros(r, c);
                    for row in 0..r {
                        gx.set(row, row, g.get(row, 0));
                    }
                    accumulate(&mut grads, x.0, gx)?;
                }
                Op::MeanAll(x) => {
                    let (r, c) = self.nodes[x.0].value.shape();
                    let gx = Tensor::filled(r, c, g.get(0, 0) / (r * c) as f64);
                    accumulate(&mut grads, x.0, gx)?;
                }
                Op::SumAll(x) => {
                    let (r, c) = self.nodes[x.0].value.shape();
                    let gx = Tensor::filled(r, c, g.get(0, 0));
                    accumulate(&mut grads, x.0, gx)?;
                }
                Op::ScatterSum(x, edges) => {
                    // the undirected neighbor-sum operator is symmetric
                    let gx = tensor::scatter_sum(&g, edges)?;
                    accumulate(&mut grads, x.0, gx)?;
                }
                Op::SegmentSum(x, ids) => {
                    let (r, c) = self.nodes[x.0].value.shape();
                    let mut gx = Tensor::zeros(r, c);
                    for (row, &seg) in ids.iter().enumerate() {
                        gx.row_mut(row).copy_from_slice(g.row(seg));
                    }
                    accumulate(&mut grads, x.0, gx)?;
                }
                Op::SegmentMean(x, ids, segments) => {
                    let counts = tensor::segment_counts(ids, *segments);
                    let (r, c) = self.nodes[x.0].value.shape();
                    let mut gx = Tensor::zeros(r, c);
                    for (row, &seg) in ids.iter().enumerate() {
                        let inv = 1.0 / counts[seg] as f64;
                        for (o, &gv) in gx.row_mut(row).iter_mut().zip(g.row(seg)) {
                            *o = gv * inv;
                        }
                    }
                    accumulate(&mut grads, x.0, gx)?;
                }
                Op::GatherRows(x, idx) => {
                    let (r, c) = self.nodes[x.0].value.shape();
                    let mut gx = Tensor::zeros(r, c);
                    for (k, &src) in idx.iter().enumerate() {
                        for (o, &gv) in gx.row_mut(src).iter_mut().zip(g.row(k)) {
                            *o += gv;
                        }
                    }
                    accumulate(&mut grads, x.0, gx)?;
                }
                Op::CosineSim(a, b) => {
                    let (ga, gb) = cosine_backward(
                        &self.nodes[a.0].value,
                        &self.nodes[b.0].value,
                        &self.nodes[i].value,
                        &g,
                    );
                    accumulate(&mut grads, a.0, ga)?;
                    accumulate(&mut grads, b.0, gb)?;
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Tensor>], idx: usize, delta: Tensor) -> Result<(), TensorError> {
    match grads[idx].take() {
        Some(g) => grads[idx] = Some(g.add(&delta)?),
        None => grads[idx] = Some(delta),
    }
    Ok(())
}

/// Exact gradient of the ε-guarded cosine similarity used in the forward pass.
///
/// With `n_i = ‖a_i‖ + ε` and `m_j = ‖b_j‖ + ε`:
/// `∂S_ij/∂a_i = b_j/(n_i m_j) − S_ij · â_i / n_i`, where `â_i = a_i/‖a_i‖`
/// (taken as 0 for a zero row, which matches the directional derivative).
fn cosine_backward(a: &Tensor, b: &Tensor, s: &Tensor, g: &Tensor) -> (Tensor, Tensor) {
    let d = a.cols();
    let mut ga = Tensor::zeros(a.rows(), d);
    let mut gb = Tensor::zeros(b.rows(), d);
    let na_raw: Vec<f64> = (0..a.rows()).map(|i| a.row_norm(i)).collect();
    let nb_raw: Vec<f64> = (0..b.rows()).map(|j| b.row_norm(j)).collect();
    let na: Vec<f64> = na_raw.iter().map(|v| v + COSINE_EPS).collect();
    let nb: Vec<f64> = nb_raw.iter().map(|v| v + COSINE_EPS).collect();

    for i in 0..a.rows() {
        let a_hat: Vec<f64> = if na_raw[i] > 0.0 {
            a.row(i).iter().map(|v| v / na_raw[i]).collect()
        } else {
            vec![0.0; d]
        };
        for j in 0..b.rows() {
            let gv = g.get(i, j);
            if gv == 0.0 {
                continue;
            }
            let sij = s.get(i, j);
            let inv = 1.0 / (na[i] * nb[j]);
            let b_hat_scale = if nb_raw[j] > 0.0 { 1.0 / nb_raw[j] } else { 0.0 };
            for k in 0..d {
                ga.set(
                    i,
                    k,
                    ga.get(i, k) + gv * (b.get(j, k) * inv - sij * a_hat[k] / na[i]),
                );
                gb.set(
                    j,
                    k,
                    gb.get(j, k)
                        + gv * (a.get(i, k) * inv - sij * b.get(j, k) * b_hat_scale / nb[j]),
                );
            }
        }
    }
    (ga, gb)
}

/// One Adam update over `params` with bias correction; gradients are zeroed afterwards.
pub fn adam_step_with(params: &[ParamRef], lr: f64, beta1: f64, beta2: f64, eps: f64) {
    for p in params {
        let mut p = p.borrow_mut();
        p.step_count += 1;
        let t = p.step_count as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let (r, c) = p.value.shape();
        for i in 0..r {
            for j in 0..c {
                let g = p.grad.get(i, j);
                let m = beta1 * p.adam_m.get(i, j) + (1.0 - beta1) * g;
                let v = beta2 * p.adam_v.get(i, j) + (1.0 - beta2) * g * g;
                p.adam_m.set(i, j, m);
                p.adam_v.set(i, j, v);
                let update = lr * (m / bc1) / ((v / bc2).sqrt() + eps);
                let next = p.value.get(i, j) - update;
                p.value.set(i, j, next);
            }
        }
        p.grad = Tensor::zeros(r, c);
    }
}

/// Adam with the standard β₁ = 0.9, β₂ = 0.999, ε = 1e−8.
pub fn adam_step(params: &[ParamRef], lr: f64) {
    adam_step_with(params, lr, 0.9, 0.999, 1e-8);
}

/// Execution surface shared by the recording ([`Tape`]) and plain inference
/// ([`PlainEngine`]) paths, so the encoder forward is written once.
pub trait Engine {
    type Value: Clone;

    fn input(&mut self, t: Tensor) -> Self::Value;
    fn constant(&mut self, t: Tensor) -> Self::Value;
    fn param(&mut self, p: &ParamRef) -> Self::Value;
    fn matmul(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, TensorError>;
    fn add(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, TensorError>;
    fn mul_elem(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, TensorError>;
    fn add_bias(&mut self, x: &Self::Value, b: &Self::Value) -> Result<Self::Value, TensorError>;
    fn relu(&mut self, x: &Self::Value) -> Self::Value;
    fn scale(&mut self, x: &Self::Value, c: f64) -> Self::Value;
    fn scatter_sum(&mut self, x: &Self::Value, edges: &[(usize, usize)]) -> Result<Self::Value, TensorError>;
    fn segment_sum(&mut self, x: &Self::Value, ids: &[usize], segments: usize) -> Result<Self::Value, TensorError>;
    fn segment_mean(&mut self, x: &Self::Value, ids: &[usize], segments: usize) -> Result<Self::Value, TensorError>;
    fn tensor(&self, v: &Self::Value) -> Tensor;
}

impl Engine for Tape {
    type Value = Value;

    fn input(&mut self, t: Tensor) -> Value {
        self.constant(t)
    }
    fn constant(&mut self, t: Tensor) -> Value {
        Tape::constant(self, t)
    }
    fn param(&mut self, p: &ParamRef) -> Value {
        Tape::param(self, p)
    }
    fn matmul(&mut self, a: &Value, b: &Value) -> Result<Value, TensorError> {
        Tape::matmul(self, *a, *b)
    }
    fn add(&mut self, a: &Value, b: &Value) -> Result<Value, TensorError> {
        Tape::add(self, *a, *b)
    }
    fn mul_elem(&mut self, a: &Value, b: &Value) -> Result<Value, TensorError> {
        Tape::mul_elem(self, *a, *b)
    }
    fn add_bias(&mut self, x: &Value, b: &Value) -> Result<Value, TensorError> {
        Tape::add_bias(self, *x, *b)
    }
    fn relu(&mut self, x: &Value) -> Value {
        Tape::relu(self, *x)
    }
    fn scale(&mut self, x: &Value, c: f64) -> Value {
        Tape::scale(self, *x, c)
    }
    fn scatter_sum(&mut self, x: &Value, edges: &[(usize, usize)]) -> Result<Value, TensorError> {
        Tape::scatter_sum(self, *x, edges)
    }
    fn segment_sum(&mut self, x: &Value, ids: &[usize], segments: usize) -> Result<Value, TensorError> {
        Tape::segment_sum(self, *x, ids, segments)
    }
    fn segment_mean(&mut self, x: &Value, ids: &[usize], segments: usize) -> Result<Value, TensorError> {
        Tape::segment_mean(self, *x, ids, segments)
    }
    fn tensor(&self, v: &Value) -> Tensor {
        self.value(*v).clone()
    }
}

/// Tape-free execution on frozen weights; values are plain tensors.
#[derive(Default)]
pub struct PlainEngine;

impl Engine for PlainEngine {
    type Value = Tensor;

    fn input(&mut self, t: Tensor) -> Tensor {
        t
    }
    fn constant(&mut self, t: Tensor) -> Tensor {
        t
    }
    fn param(&mut self, p: &ParamRef) -> Tensor {
        p.value()
    }
    fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        a.matmul(b)
    }
    fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        a.add(b)
    }
    fn mul_elem(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        a.mul_elem(b)
    }
    fn add_bias(&mut self, x: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        x.add_bias(b)
    }
    fn relu(&mut self, x: &Tensor) -> Tensor {
        x.relu()
    }
    fn scale(&mut self, x: &Tensor, c: f64) -> Tensor {
        x.scale(c)
    }
    fn scatter_sum(&mut self, x: &Tensor, edges: &[(usize, usize)]) -> Result<Tensor, TensorError> {
        tensor::scatter_sum(x, edges)
    }
    fn segment_sum(&mut self, x: &Tensor, ids: &[usize], segments: usize) -> Result<Tensor, TensorError> {
        tensor::segment_sum(x, ids, segments)
    }
    fn segment_mean(&mut self, x: &Tensor, ids: &[usize], segments: usize) -> Result<Tensor, TensorError> {
        tensor::segment_mean(x, ids, segments)
    }
    fn tensor(&self, v: &Tensor) -> Tensor {
        v.clone()
    }
}
