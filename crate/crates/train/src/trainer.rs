//! Mini-batch training with validation-based early stopping.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use logmend_encode::{
    apply_mask, batch_graphs, build_graph, derive_seed, standard_strategies, EncoderSet,
    HeteroGraph, MaskStrategy,
};
use logmend_log::EventLog;
use logmend_model::{loss_on_batch, ModelConfig, ModelParams};
use logmend_tensor::Tape;

use crate::adam::{adam_step, AdamState};
use crate::config::TrainConfig;
use crate::error::TrainError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
}

/// Tracks the best validation loss; signals stop after `patience` epochs
/// without strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: Option<usize>,
    best: f64,
    best_epoch: usize,
    bad_streak: usize,
}

impl EarlyStopping {
    pub fn new(patience: Option<usize>) -> Self {
        Self { patience, best: f64::INFINITY, best_epoch: 0, bad_streak: 0 }
    }

    /// Returns true when training should stop after this epoch. `epoch` is
    /// 1-based. Observing also reports whether this epoch improved.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, bool) {
        let improved = val_loss < self.best;
        if improved {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.bad_streak = 0;
        } else {
            self.bad_streak += 1;
        }
        let stop = self.patience.is_some_and(|p| self.bad_streak >= p);
        (stop, improved)
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

/// Expands a split into one graph per (strategy, trace) pair. Mask seeds are
/// derived from `mask_seed`, the strategy index and the trace index, so the
/// damaged variants are fixed for a given base seed.
pub fn expand_with_strategies(
    log: &EventLog,
    enc: &EncoderSet,
    strategies: &[Box<dyn MaskStrategy>],
    mask_seed: u64,
) -> Result<Vec<HeteroGraph>, TrainError> {
    let mut graphs = Vec::with_capacity(log.n_traces() * strategies.len());
    for (si, strategy) in strategies.iter().enumerate() {
        for (ti, trace) in log.traces.iter().enumerate() {
            let mask = apply_mask(
                strategy.as_ref(),
                trace.len(),
                derive_seed(mask_seed, si as u64, ti as u64),
            );
            graphs.push(build_graph(trace, &mask, enc)?);
        }
    }
    Ok(graphs)
}

/// Mean per-batch loss over a fixed graph list, without touching gradients.
pub fn evaluate_loss(
    graphs: &[HeteroGraph],
    params: &ModelParams,
    cfg: &ModelConfig,
    batch_size: usize,
) -> Result<f64, TrainError> {
    if graphs.is_empty() {
        return Err(TrainError::EmptyEvaluationSet);
    }
    let mut total = 0.0;
    let mut batches = 0;
    for chunk in graphs.chunks(batch_size) {
        let refs: Vec<&HeteroGraph> = chunk.iter().collect();
        let batch = batch_graphs(&refs)?;
        let mut tape = Tape::new();
        let loss = loss_on_batch(&mut tape, &batch, params, cfg)?;
        total += tape.value(loss).item()?;
        batches += 1;
    }
    Ok(total / batches as f64)
}

/// Trains on prebuilt graphs, validating after every epoch; returns the
/// parameters of the best-validation epoch.
pub fn train_on_graphs(
    train_graphs: &[HeteroGraph],
    val_graphs: &[HeteroGraph],
    enc: &EncoderSet,
    train_cfg: &TrainConfig,
    model_cfg: &ModelConfig,
) -> Result<(ModelParams, TrainHistory), TrainError> {
    train_cfg.validate()?;
    if train_graphs.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if val_graphs.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }

    // The tuned aggregator wins over the model config's.
    let cfg = ModelConfig {
        aggregator: train_cfg.aggregator.clone(),
        seed: train_cfg.seed,
        ..model_cfg.clone()
    };
    let mut params = ModelParams::init(enc, &cfg)?;
    let mut state = AdamState::new(&params.set);
    let mut stopper = EarlyStopping::new(train_cfg.patience);
    let mut history = TrainHistory::default();
    let mut best_values = params.set.snapshot_values();

    let mut order: Vec<usize> = (0..train_graphs.len()).collect();
    for epoch in 1..=train_cfg.max_epochs {
        let mut rng = StdRng::seed_from_u64(derive_seed(train_cfg.seed, 0xe0c5, epoch as u64));
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(train_cfg.batch_size) {
            let refs: Vec<&HeteroGraph> = chunk.iter().map(|&i| &train_graphs[i]).collect();
            let batch = batch_graphs(&refs)?;
            let mut tape = Tape::new();
            let loss = loss_on_batch(&mut tape, &batch, &params, &cfg)?;
            let value = tape.value(loss).item()?;
            if !value.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: batches });
            }
            tape.backward(loss, &mut params.set)?;
            adam_step(&mut params.set, &mut state, train_cfg.learning_rate, train_cfg.weight_decay);
            epoch_loss += value;
            batches += 1;
        }

        let val_loss = evaluate_loss(val_graphs, &params, &cfg, train_cfg.batch_size)?;
        if !val_loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch, batch: 0 });
        }
        history.epochs.push(EpochStats {
            epoch,
            train_loss: epoch_loss / batches as f64,
            val_loss,
        });

        let (stop, improved) = stopper.observe(epoch, val_loss);
        if improved {
            best_values = params.set.snapshot_values();
        }
        if stop {
            break;
        }
    }

    params.set.restore_values(&best_values);
    history.best_epoch = stopper.best_epoch();
    Ok((params, history))
}

/// Expands both splits under the four standard masking strategies, then
/// trains. The training set is the 4x expansion of the training split.
pub fn train_model(
    train: &EventLog,
    val: &EventLog,
    enc: &EncoderSet,
    train_cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    random_p: f64,
) -> Result<(ModelParams, TrainHistory), TrainError> {
    if train.n_traces() == 0 {
        return Err(TrainError::EmptySplit("train"));
    }
    if val.n_traces() == 0 {
        return Err(TrainError::EmptySplit("validation"));
    }
    let strategies = standard_strategies(random_p)?;
    let train_graphs = expand_with_strategies(train, enc, &strategies, train_cfg.seed)?;
    let val_graphs = expand_with_strategies(val, enc, &strategies, derive_seed(train_cfg.seed, 0x7a1, 0))?;
    train_on_graphs(&train_graphs, &val_graphs, enc, train_cfg, model_cfg)
}
