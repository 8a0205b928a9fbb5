//! Training hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::TrainError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    /// Aggregation kernel name; overrides the model config's choice when the
    /// two disagree (this is the tuned hyperparameter).
    pub aggregator: String,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; `None`
    /// disables early stopping.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            batch_size: 64,
            weight_decay: 0.0,
            aggregator: "mean".into(),
            max_epochs: 50,
            patience: Some(5),
            seed: 123,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(TrainError::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(TrainError::InvalidConfig("weight_decay must be non-negative".into()));
        }
        if self.max_epochs == 0 {
            return Err(TrainError::InvalidConfig("max_epochs must be at least 1".into()));
        }
        logmend_tensor::aggregate_kernel(&self.aggregator)
            .map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}
