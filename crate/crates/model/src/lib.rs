//! Heterogeneous SAGE network: per-relation convolutions, K-layer message
//! passing, per-attribute output heads, the combined classification and
//! regression loss, and repair prediction.

mod config;
mod error;
mod forward;
mod params;
mod params_io;
mod predict;

pub use config::ModelConfig;
pub use error::ModelError;
pub use forward::{compute_loss, forward, loss_on_batch, sage_layer, PredictionBlock, Predictions, RowRef};
pub use params::{head_width, ModelParams, Projection, RelationWeights};
pub use params_io::{load_params, save_params, schema_fingerprint};
pub use predict::{predict_batch, predict_repair, repair_argmax, MaskedNode, NodePrediction, RepairedValue};
