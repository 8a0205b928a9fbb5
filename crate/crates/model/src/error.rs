use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model and batch were built under different schemas: {0}")]
    SchemaMismatch(String),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("parameter file is not in the expected format: {0}")]
    BadParamsFile(String),
    #[error(transparent)]
    Tensor(#[from] logmend_tensor::TensorError),
    #[error(transparent)]
    Encode(#[from] logmend_encode::EncodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
