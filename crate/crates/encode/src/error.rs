use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("mask length {mask} does not match trace length {trace}")]
    LengthMismatch { mask: usize, trace: usize },
    #[error("numeric attribute `{attr}` has negative derived value {value}")]
    NegativeDerivedValue { attr: String, value: f64 },
    #[error("graphs built under different schemas or encoders cannot be combined: {0}")]
    SchemaMismatch(String),
    #[error("unknown masking strategy `{0}`")]
    UnknownStrategy(String),
    #[error("random mask probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error(transparent)]
    Tensor(#[from] logmend_tensor::TensorError),
    #[error(transparent)]
    Log(#[from] logmend_log::LogError),
    #[error("cannot serialize encoders: {0}")]
    Json(#[from] serde_json::Error),
}
