//! Random hyperparameter search.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::TrainError;

/// The sampled dimensions: log-uniform learning rate, batch size from a
/// fixed set, uniform weight decay and an aggregation kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSpace {
    pub learning_rate: (f64, f64),
    pub batch_sizes: Vec<usize>,
    pub weight_decay: (f64, f64),
    pub aggregators: Vec<String>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            learning_rate: (1e-4, 1e-1),
            batch_sizes: vec![16, 64, 256, 512, 1024, 2048],
            weight_decay: (1e-2, 1e-1),
            aggregators: logmend_tensor::KERNEL_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SearchSpace {
    /// Draws one config; the non-sampled fields come from `template`.
    pub fn sample(&self, rng: &mut StdRng, template: &TrainConfig) -> TrainConfig {
        let (lo, hi) = self.learning_rate;
        let learning_rate = (rng.random_range(lo.ln()..hi.ln())).exp();
        let batch_size = self.batch_sizes[rng.random_range(0..self.batch_sizes.len())];
        let (wlo, whi) = self.weight_decay;
        let weight_decay = rng.random_range(wlo..whi);
        let aggregator = self.aggregators[rng.random_range(0..self.aggregators.len())].clone();
        TrainConfig {
            learning_rate,
            batch_size,
            weight_decay,
            aggregator,
            ..template.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trial {
    pub config: TrainConfig,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: TrainConfig,
    pub best_loss: f64,
    pub trials: Vec<Trial>,
}

/// Samples `budget` configs deterministically under `seed`, evaluates each
/// with `objective` (lower is better) and returns the argmin. Trials run in
/// parallel when `parallel` is set; results are identical either way.
pub fn random_search(
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    template: &TrainConfig,
    parallel: bool,
    objective: impl Fn(&TrainConfig) -> Result<f64, TrainError> + Sync,
) -> Result<SearchOutcome, TrainError> {
    if budget == 0 {
        return Err(TrainError::InvalidConfig("search budget must be at least 1".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let configs: Vec<TrainConfig> = (0..budget).map(|_| space.sample(&mut rng, template)).collect();

    let losses: Vec<Result<f64, TrainError>> = if parallel {
        configs.par_iter().map(&objective).collect()
    } else {
        configs.iter().map(&objective).collect()
    };

    let mut trials = Vec::with_capacity(budget);
    for (config, loss) in configs.into_iter().zip(losses) {
        trials.push(Trial { config, val_loss: loss? });
    }

    let best_idx = trials
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.val_loss.total_cmp(&b.val_loss))
        .map(|(i, _)| i)
        .expect("budget >= 1");
    Ok(SearchOutcome {
        best: trials[best_idx].config.clone(),
        best_loss: trials[best_idx].val_loss,
        trials,
    })
}
