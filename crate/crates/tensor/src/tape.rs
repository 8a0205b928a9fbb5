//! Reverse-mode differentiation over a per-step operation tape.
//!
//! A [`Tape`] records every operation of one forward pass. Node ids grow
//! monotonically, so the tape is topologically ordered by construction and
//! [`Tape::backward`] is a single reverse sweep. Parameter leaves remember
//! their [`ParamId`] and accumulate into the owning [`ParamSet`].

use std::rc::Rc;
use std::sync::Arc;

use crate::aggregate::{AggState, AggregateKernel};
use crate::error::TensorError;
use crate::param::{ParamId, ParamSet};
use crate::tensor::{softmax_rows, Tensor};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Value(usize);

enum Op {
    Constant,
    Param(ParamId),
    MatMul(Value, Value),
    Add(Value, Value),
    /// Broadcast of a 1xC bias row over the rows of the left operand.
    AddBias(Value, Value),
    Relu(Value),
    Gather {
        src: Value,
        rows: Rc<Vec<usize>>,
    },
    Aggregate {
        src: Value,
        groups: Rc<Vec<Vec<usize>>>,
        kernel: Arc<dyn AggregateKernel>,
        state: AggState,
    },
    SumAll(Value),
    SoftmaxCrossEntropy {
        logits: Value,
        targets: Rc<Vec<usize>>,
        /// Softmax probabilities saved on the forward pass.
        probs: Tensor,
    },
    L1Loss {
        pred: Value,
        target: Rc<Tensor>,
    },
}

struct Node {
    op: Op,
    value: Tensor,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The forward value computed at `v`.
    pub fn value(&self, v: Value) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Value {
        debug_assert!(value.is_finite(), "non-finite tensor produced on tape");
        self.nodes.push(Node { op, value });
        Value(self.nodes.len() - 1)
    }

    /// Leaf with no gradient flow.
    pub fn constant(&mut self, value: Tensor) -> Value {
        self.push(Op::Constant, value)
    }

    /// Leaf tied to a trainable parameter.
    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> Value {
        let value = params.get(id).value.clone();
        self.push(Op::Param(id), value)
    }

    pub fn matmul(&mut self, a: Value, b: Value) -> Result<Value, TensorError> {
        let value = self.nodes[a.0].value.matmul(&self.nodes[b.0].value)?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    /// Element-wise addition. A 1xC right operand broadcasts over rows.
    pub fn add(&mut self, a: Value, b: Value) -> Result<Value, TensorError> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape() == tb.shape() {
            let mut out = ta.clone();
            out.add_assign(tb)?;
            return Ok(self.push(Op::Add(a, b), out));
        }
        if tb.rows() == 1 && tb.cols() == ta.cols() {
            let mut out = ta.clone();
            let bias = tb.row(0).to_vec();
            for r in 0..out.rows() {
                for (o, &v) in out.row_mut(r).iter_mut().zip(&bias) {
                    *o += v;
                }
            }
            return Ok(self.push(Op::AddBias(a, b), out));
        }
        Err(TensorError::ShapeMismatch { op: "add", lhs: ta.shape(), rhs: tb.shape() })
    }

    pub fn relu(&mut self, x: Value) -> Value {
        let value = self.nodes[x.0].value.map(|v| v.max(0.0));
        self.push(Op::Relu(x), value)
    }

    /// Selects rows of `src` in the given order.
    pub fn gather_rows(&mut self, src: Value, rows: Rc<Vec<usize>>) -> Result<Value, TensorError> {
        let t = &self.nodes[src.0].value;
        let mut data = Vec::with_capacity(rows.len() * t.cols());
        for &r in rows.iter() {
            if r >= t.rows() {
                return Err(TensorError::IndexOutOfRange { index: r, bound: t.rows() });
            }
            data.extend_from_slice(t.row(r));
        }
        let value = Tensor::new(rows.len(), t.cols(), data)?;
        Ok(self.push(Op::Gather { src, rows }, value))
    }

    /// Row `g` of the output aggregates `src` rows in `groups[g]`.
    pub fn aggregate(
        &mut self,
        src: Value,
        groups: Rc<Vec<Vec<usize>>>,
        kernel: Arc<dyn AggregateKernel>,
    ) -> Result<Value, TensorError> {
        let (value, state) = kernel.forward(&self.nodes[src.0].value, &groups)?;
        Ok(self.push(Op::Aggregate { src, groups, kernel, state }, value))
    }

    /// Sum of all entries, as a 1x1 tensor.
    pub fn sum_all(&mut self, x: Value) -> Value {
        let total: f64 = self.nodes[x.0].value.data().iter().sum();
        self.push(Op::SumAll(x), Tensor::scalar(total))
    }

    /// Mean over rows of `-log softmax(logits)[target]`.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Value,
        targets: Rc<Vec<usize>>,
    ) -> Result<Value, TensorError> {
        let t = &self.nodes[logits.0].value;
        if targets.len() != t.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "softmax_cross_entropy",
                lhs: t.shape(),
                rhs: (targets.len(), 1),
            });
        }
        for &target in targets.iter() {
            if target >= t.cols() {
                return Err(TensorError::ClassOutOfRange { target, classes: t.cols() });
            }
        }
        let probs = softmax_rows(t);
        let mut total = 0.0;
        for (r, &target) in targets.iter().enumerate() {
            total -= probs.get(r, target).ln();
        }
        let value = Tensor::scalar(total / t.rows() as f64);
        Ok(self.push(Op::SoftmaxCrossEntropy { logits, targets, probs }, value))
    }

    /// Mean absolute deviation over rows; subgradient 0 at exact ties.
    pub fn l1_loss(&mut self, pred: Value, target: Rc<Tensor>) -> Result<Value, TensorError> {
        let p = &self.nodes[pred.0].value;
        if p.shape() != target.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "l1_loss",
                lhs: p.shape(),
                rhs: target.shape(),
            });
        }
        let total: f64 = p
            .data()
            .iter()
            .zip(target.data())
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        let value = Tensor::scalar(total / p.rows() as f64);
        Ok(self.push(Op::L1Loss { pred, target }, value))
    }

    /// Accumulates d(loss)/d(param) into every parameter's gradient.
    pub fn backward(&self, loss: Value, params: &mut ParamSet) -> Result<(), TensorError> {
        let loss_value = &self.nodes[loss.0].value;
        if loss_value.shape() != (1, 1) {
            return Err(TensorError::NotScalar {
                rows: loss_value.rows(),
                cols: loss_value.cols(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.0).rev() {
            let Some(grad) = grads[id].take() else {
                continue;
            };
            match &self.nodes[id].op {
                Op::Constant => {}
                Op::Param(pid) => params.accumulate_grad(*pid, &grad),
                Op::MatMul(a, b) => {
                    let ta = &self.nodes[a.0].value;
                    let tb = &self.nodes[b.0].value;
                    let da = grad.matmul_nt(tb).expect("matmul backward shape");
                    let db = ta.matmul_tn(&grad).expect("matmul backward shape");
                    accumulate(&mut grads[a.0], da);
                    accumulate(&mut grads[b.0], db);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads[a.0], grad.clone());
                    accumulate(&mut grads[b.0], grad);
                }
                Op::AddBias(a, b) => {
                    let mut db = Tensor::zeros(1, grad.cols());
                    for r in 0..grad.rows() {
                        for (o, &v) in db.row_mut(0).iter_mut().zip(grad.row(r)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads[a.0], grad);
                    accumulate(&mut grads[b.0], db);
                }
                Op::Relu(x) => {
                    let input = &self.nodes[x.0].value;
                    let mut dx = grad;
                    for (d, &v) in dx.data_mut().iter_mut().zip(input.data()) {
                        if v <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    accumulate(&mut grads[x.0], dx);
                }
                Op::Gather { src, rows } => {
                    let src_shape = self.nodes[src.0].value.shape();
                    let mut dsrc = Tensor::zeros(src_shape.0, src_shape.1);
                    for (i, &r) in rows.iter().enumerate() {
                        let g = grad.row(i).to_vec();
                        for (d, v) in dsrc.row_mut(r).iter_mut().zip(g) {
                            *d += v;
                        }
                    }
                    accumulate(&mut grads[src.0], dsrc);
                }
                Op::Aggregate { src, groups, kernel, state } => {
                    let src_shape = self.nodes[src.0].value.shape();
                    let mut dsrc = Tensor::zeros(src_shape.0, src_shape.1);
                    kernel.backward(&grad, state, groups, &mut dsrc);
                    accumulate(&mut grads[src.0], dsrc);
                }
                Op::SumAll(x) => {
                    let shape = self.nodes[x.0].value.shape();
                    let g = grad.item().expect("sum_all output is scalar");
                    accumulate(&mut grads[x.0], Tensor::filled(shape.0, shape.1, g));
                }
                Op::SoftmaxCrossEntropy { logits, targets, probs } => {
                    let g = grad.item().expect("loss output is scalar");
                    let scale = g / probs.rows() as f64;
                    let mut dl = probs.clone();
                    for (r, &target) in targets.iter().enumerate() {
                        let v = dl.get(r, target);
                        dl.set(r, target, v - 1.0);
                    }
                    let dl = dl.map(|v| v * scale);
                    accumulate(&mut grads[logits.0], dl);
                }
                Op::L1Loss { pred, target } => {
                    let g = grad.item().expect("loss output is scalar");
                    let p = &self.nodes[pred.0].value;
                    let scale = g / p.rows() as f64;
                    let mut dp = Tensor::zeros(p.rows(), p.cols());
                    for ((d, &a), &b) in dp.data_mut().iter_mut().zip(p.data()).zip(target.data()) {
                        *d = if a > b {
                            scale
                        } else if a < b {
                            -scale
                        } else {
                            0.0
                        };
                    }
                    accumulate(&mut grads[pred.0], dp);
                }
            }
        }
        Ok(())
    }
}

fn accumulate(slot: &mut Option<Tensor>, delta: Tensor) {
    match slot {
        Some(existing) => existing.add_assign(&delta).expect("gradient shapes must agree"),
        None => *slot = Some(delta),
    }
}
