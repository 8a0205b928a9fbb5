//! Training and evaluation: Adam with weight decay, early stopping, random
//! hyperparameter search over the standard space, repeated-run evaluation
//! with mean/std reporting, and the end-to-end repair pipeline.

mod adam;
mod config;
mod error;
mod evaluate;
mod metrics;
mod repair;
mod search;
mod trainer;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use config::TrainConfig;
pub use error::TrainError;
pub use evaluate::{evaluate_multi_run, MetricSummary, RawSeconds, RunReport};
pub use metrics::{accuracy, mae, mean_std};
pub use repair::repair_log;
pub use search::{random_search, SearchOutcome, SearchSpace, Trial};
pub use trainer::{
    evaluate_loss, expand_with_strategies, train_model, train_on_graphs, EarlyStopping,
    EpochStats, TrainHistory,
};
