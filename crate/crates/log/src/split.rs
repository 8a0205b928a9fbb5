//! Deterministic trace-level splitting.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::error::LogError;
use crate::event::EventLog;

/// Splits a log by trace into (train, val, test).
///
/// Trace order is shuffled deterministically under `seed`, then partitioned
/// contiguously. Sizes are `floor(n * ratio)` with the remainder assigned to
/// the training split.
pub fn split_log(
    log: &EventLog,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(EventLog, EventLog, EventLog), LogError> {
    let (train_r, val_r, test_r) = ratios;
    if train_r <= 0.0 || val_r <= 0.0 || test_r <= 0.0 {
        return Err(LogError::InvalidRatios);
    }
    if (train_r + val_r + test_r - 1.0).abs() > 1e-9 {
        return Err(LogError::InvalidRatios);
    }

    let n = log.traces.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = StdRng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_val = (n as f64 * val_r).floor() as usize;
    let n_test = (n as f64 * test_r).floor() as usize;
    let n_train = n - n_val - n_test;

    let pick = |range: std::ops::Range<usize>| EventLog {
        schema: log.schema.clone(),
        traces: order[range].iter().map(|&i| log.traces[i].clone()).collect(),
    };

    Ok((
        pick(0..n_train),
        pick(n_train..n_train + n_val),
        pick(n_train + n_val..n),
    ))
}
