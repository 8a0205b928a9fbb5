//! Model hyperparameters.

use serde::{Deserialize, Serialize};

use logmend_tensor::aggregate_kernel;

use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Shared hidden width of every node representation.
    pub hidden_size: usize,
    /// Number of message-passing layers.
    pub n_layers: usize,
    /// Aggregation kernel name: one of `sum`, `mean`, `max`.
    pub aggregator: String,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_size: 128,
            n_layers: 2,
            aggregator: "mean".into(),
            seed: 123,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden_size == 0 {
            return Err(ModelError::InvalidConfig("hidden_size must be at least 1".into()));
        }
        if self.n_layers == 0 {
            return Err(ModelError::InvalidConfig("n_layers must be at least 1".into()));
        }
        aggregate_kernel(&self.aggregator).map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}
