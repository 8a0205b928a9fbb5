use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: left is {}x{}, right is {}x{}", lhs.0, lhs.1, rhs.0, rhs.1)]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("data length {len} does not match shape {rows}x{cols}")]
    DataLength { len: usize, rows: usize, cols: usize },
    #[error("row index {index} out of range for {bound} rows")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("class target {target} out of range for {classes} classes")]
    ClassOutOfRange { target: usize, classes: usize },
    #[error("expected a 1x1 scalar, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },
    #[error("unknown aggregation kernel `{0}`")]
    UnknownKernel(String),
}
