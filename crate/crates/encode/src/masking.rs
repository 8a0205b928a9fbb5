//! Event masking strategies.
//!
//! Every strategy implements [`MaskStrategy`] and is picked by name through
//! [`strategy_by_name`], so CLI flags and config files select the variant at
//! runtime. Indices are 0-based throughout.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::EncodeError;

pub trait MaskStrategy: Send + Sync {
    fn name(&self) -> &str;

    /// Per-event removal flags for a trace of `trace_len` events.
    /// Deterministic under (strategy, seed, trace_len).
    fn removal_flags(&self, trace_len: usize, seed: u64) -> Vec<bool>;
}

/// Removes events at odd indices (1, 3, 5, ...).
pub struct OddMask;

impl MaskStrategy for OddMask {
    fn name(&self) -> &str {
        "odd"
    }

    fn removal_flags(&self, trace_len: usize, _seed: u64) -> Vec<bool> {
        (0..trace_len).map(|i| i % 2 == 1).collect()
    }
}

/// Removes events at even indices (0, 2, 4, ...).
pub struct EvenMask;

impl MaskStrategy for EvenMask {
    fn name(&self) -> &str {
        "even"
    }

    fn removal_flags(&self, trace_len: usize, _seed: u64) -> Vec<bool> {
        (0..trace_len).map(|i| i % 2 == 0).collect()
    }
}

/// Keeps one event, removes the following two, repeating along the trace.
pub struct WindowMask;

impl MaskStrategy for WindowMask {
    fn name(&self) -> &str {
        "window"
    }

    fn removal_flags(&self, trace_len: usize, _seed: u64) -> Vec<bool> {
        (0..trace_len).map(|i| i % 3 != 0).collect()
    }
}

/// Removes each event independently with probability `p`. If that would
/// remove every event, the lowest index is kept.
pub struct RandomMask {
    p: f64,
}

impl RandomMask {
    pub fn new(p: f64) -> Result<Self, EncodeError> {
        if !(0.0..1.0).contains(&p) || p == 0.0 {
            return Err(EncodeError::InvalidProbability(p));
        }
        Ok(Self { p })
    }
}

impl MaskStrategy for RandomMask {
    fn name(&self) -> &str {
        "random"
    }

    fn removal_flags(&self, trace_len: usize, seed: u64) -> Vec<bool> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut flags: Vec<bool> = (0..trace_len).map(|_| rng.random_bool(self.p)).collect();
        if flags.iter().all(|&f| f) {
            if let Some(first) = flags.first_mut() {
                *first = false;
            }
        }
        flags
    }
}

/// Removes exactly the given event indices.
pub struct ExplicitMask {
    indices: Vec<usize>,
}

impl ExplicitMask {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }
}

impl MaskStrategy for ExplicitMask {
    fn name(&self) -> &str {
        "explicit"
    }

    fn removal_flags(&self, trace_len: usize, _seed: u64) -> Vec<bool> {
        let mut flags = vec![false; trace_len];
        for &i in &self.indices {
            assert!(i < trace_len, "explicit mask index {i} out of bounds for length {trace_len}");
            flags[i] = true;
        }
        flags
    }
}

/// Names accepted by [`strategy_by_name`], in canonical order.
pub const STRATEGY_NAMES: &[&str] = &["odd", "even", "window", "random"];

/// Looks a strategy up by name. `random_p` only affects `random`.
pub fn strategy_by_name(name: &str, random_p: f64) -> Result<Box<dyn MaskStrategy>, EncodeError> {
    match name {
        "odd" => Ok(Box::new(OddMask)),
        "even" => Ok(Box::new(EvenMask)),
        "window" => Ok(Box::new(WindowMask)),
        "random" => Ok(Box::new(RandomMask::new(random_p)?)),
        other => Err(EncodeError::UnknownStrategy(other.to_string())),
    }
}

/// The four strategies every model trains on, in canonical order.
pub fn standard_strategies(random_p: f64) -> Result<Vec<Box<dyn MaskStrategy>>, EncodeError> {
    STRATEGY_NAMES
        .iter()
        .map(|name| strategy_by_name(name, random_p))
        .collect()
}

/// Applies a strategy to a trace of the given length.
pub fn apply_mask(strategy: &dyn MaskStrategy, trace_len: usize, seed: u64) -> Vec<bool> {
    strategy.removal_flags(trace_len, seed)
}

/// Length of the longest run of consecutive removal flags.
pub fn max_missing_run(mask: &[bool]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &flag in mask {
        if flag {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// True when `n_layers` message-passing layers can reach every masked event:
/// a run of empty events longer than twice the layer count receives no
/// information from outside the run.
pub fn coverage_check(mask: &[bool], n_layers: usize) -> bool {
    max_missing_run(mask) <= 2 * n_layers
}

/// Mixes a base seed with two indices; used to give each (strategy, trace)
/// pair its own reproducible randomness.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut x = base ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
