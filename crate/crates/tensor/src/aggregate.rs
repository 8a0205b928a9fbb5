//! Grouped row aggregation kernels.
//!
//! Each kernel implements one reduction over neighbor rows (sum, mean, max)
//! behind the common [`AggregateKernel`] trait. Kernels are looked up by name
//! at runtime, so configuration files and CLI flags can pick the variant.

use std::sync::Arc;

use crate::error::TensorError;
use crate::tensor::Tensor;

/// State captured on the forward pass that the backward pass needs.
#[derive(Debug, Clone)]
pub enum AggState {
    None,
    /// For max: source row chosen per (group, column), `usize::MAX` when the
    /// group is empty. Ties resolve to the lowest source row.
    Argmax(Vec<usize>),
}

pub trait AggregateKernel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Row `g` of the output aggregates `src` rows listed in `groups[g]`.
    /// Empty groups produce a zero row.
    fn forward(&self, src: &Tensor, groups: &[Vec<usize>]) -> Result<(Tensor, AggState), TensorError>;

    /// Routes `grad_out` back onto `grad_src` (accumulating).
    fn backward(&self, grad_out: &Tensor, state: &AggState, groups: &[Vec<usize>], grad_src: &mut Tensor);
}

fn check_groups(src: &Tensor, groups: &[Vec<usize>]) -> Result<(), TensorError> {
    for group in groups {
        for &idx in group {
            if idx >= src.rows() {
                return Err(TensorError::IndexOutOfRange { index: idx, bound: src.rows() });
            }
        }
    }
    Ok(())
}

pub struct SumKernel;

impl AggregateKernel for SumKernel {
    fn name(&self) -> &'static str {
        "sum"
    }

    fn forward(&self, src: &Tensor, groups: &[Vec<usize>]) -> Result<(Tensor, AggState), TensorError> {
        check_groups(src, groups)?;
        let mut out = Tensor::zeros(groups.len(), src.cols());
        for (g, group) in groups.iter().enumerate() {
            for &idx in group {
                let src_row = src.row(idx).to_vec();
                for (o, v) in out.row_mut(g).iter_mut().zip(src_row) {
                    *o += v;
                }
            }
        }
        Ok((out, AggState::None))
    }

    fn backward(&self, grad_out: &Tensor, _state: &AggState, groups: &[Vec<usize>], grad_src: &mut Tensor) {
        for (g, group) in groups.iter().enumerate() {
            for &idx in group {
                let grad_row = grad_out.row(g).to_vec();
                for (d, v) in grad_src.row_mut(idx).iter_mut().zip(grad_row) {
                    *d += v;
                }
            }
        }
    }
}

pub struct MeanKernel;

impl AggregateKernel for MeanKernel {
    fn name(&self) -> &'static str {
        "mean"
    }

    fn forward(&self, src: &Tensor, groups: &[Vec<usize>]) -> Result<(Tensor, AggState), TensorError> {
        check_groups(src, groups)?;
        let mut out = Tensor::zeros(groups.len(), src.cols());
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let inv = 1.0 / group.len() as f64;
            for &idx in group {
                let src_row = src.row(idx).to_vec();
                for (o, v) in out.row_mut(g).iter_mut().zip(src_row) {
                    *o += v * inv;
                }
            }
        }
        Ok((out, AggState::None))
    }

    fn backward(&self, grad_out: &Tensor, _state: &AggState, groups: &[Vec<usize>], grad_src: &mut Tensor) {
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let inv = 1.0 / group.len() as f64;
            for &idx in group {
                let grad_row = grad_out.row(g).to_vec();
                for (d, v) in grad_src.row_mut(idx).iter_mut().zip(grad_row) {
                    *d += v * inv;
                }
            }
        }
    }
}

pub struct MaxKernel;

impl AggregateKernel for MaxKernel {
    fn name(&self) -> &'static str {
        "max"
    }

    fn forward(&self, src: &Tensor, groups: &[Vec<usize>]) -> Result<(Tensor, AggState), TensorError> {
        check_groups(src, groups)?;
        let cols = src.cols();
        let mut out = Tensor::zeros(groups.len(), cols);
        let mut argmax = vec![usize::MAX; groups.len() * cols];
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let mut best = vec![f64::NEG_INFINITY; cols];
            for &idx in group {
                for (c, &v) in src.row(idx).iter().enumerate() {
                    // Strict comparison keeps the lowest source row on ties.
                    if v > best[c] {
                        best[c] = v;
                        argmax[g * cols + c] = idx;
                    }
                }
            }
            out.row_mut(g).copy_from_slice(&best);
        }
        Ok((out, AggState::Argmax(argmax)))
    }

    fn backward(&self, grad_out: &Tensor, state: &AggState, groups: &[Vec<usize>], grad_src: &mut Tensor) {
        let AggState::Argmax(argmax) = state else {
            return;
        };
        let cols = grad_out.cols();
        for g in 0..groups.len() {
            for c in 0..cols {
                let idx = argmax[g * cols + c];
                if idx != usize::MAX {
                    let v = grad_out.get(g, c);
                    let d = grad_src.get(idx, c);
                    grad_src.set(idx, c, d + v);
                }
            }
        }
    }
}

/// Names of the registered kernels, in canonical order.
pub const KERNEL_NAMES: &[&str] = &["sum", "mean", "max"];

/// Looks a kernel up by name.
pub fn aggregate_kernel(name: &str) -> Result<Arc<dyn AggregateKernel>, TensorError> {
    match name {
        "sum" => Ok(Arc::new(SumKernel)),
        "mean" => Ok(Arc::new(MeanKernel)),
        "max" => Ok(Arc::new(MaxKernel)),
        other => Err(TensorError::UnknownKernel(other.to_string())),
    }
}
