//! Minimal dense 2-D tensor arithmetic with reverse-mode differentiation.
//!
//! Provides exactly what a small message-passing network needs: matrix
//! products, bias broadcast, rectification, grouped neighbor aggregation,
//! row gathering, softmax cross-entropy and mean-absolute-error losses, all
//! recorded on a [`Tape`] for a single reverse sweep. Aggregation variants
//! live behind the [`AggregateKernel`] trait and are selected by name.
//!
//! Everything is `f64`, single-threaded per tape, and deterministic:
//! identical inputs produce bit-identical outputs.

mod aggregate;
mod error;
mod param;
mod tape;
mod tensor;

pub use aggregate::{aggregate_kernel, AggState, AggregateKernel, KERNEL_NAMES, MaxKernel, MeanKernel, SumKernel};
pub use error::TensorError;
pub use param::{ParamId, ParamSet, Parameter};
pub use tape::{Tape, Value};
pub use tensor::{softmax_rows, Tensor};
