//! Multi-run evaluation: train several models under derived seeds, test each
//! on the four damaged variants of the test split, report mean and standard
//! deviation per strategy and attribute.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use logmend_encode::{
    batch_graphs, derive_seed, standard_strategies, EncoderSet, HeteroGraph, Targets,
    MISSING_NUMERIC,
};
use logmend_log::{AttrKind, EventLog};
use logmend_model::{predict_batch, ModelConfig, ModelParams, NodePrediction};

use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::metrics::{accuracy, mae, mean_std};
use crate::trainer::{expand_with_strategies, train_on_graphs, TrainHistory};

const EVAL_BATCH: usize = 256;

#[derive(Debug, Clone, Serialize)]
pub struct RawSeconds {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    /// "accuracy" for categorical attributes, "mae" for numeric ones.
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub runs: Vec<f64>,
    /// For timestamp attributes: the same error in raw seconds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_seconds: Option<RawSeconds>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// strategy -> attribute -> summary.
    pub strategies: BTreeMap<String, BTreeMap<String, MetricSummary>>,
    pub histories: Vec<TrainHistory>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    /// The report document: exactly `{strategy: {attribute: summary}}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.strategies).expect("serializable report")
    }

    pub fn summary(&self, strategy: &str, attribute: &str) -> Option<&MetricSummary> {
        self.strategies.get(strategy).and_then(|m| m.get(attribute))
    }
}

/// Per-run metric values per (strategy, attribute).
type RunMetrics = BTreeMap<String, BTreeMap<String, (f64, Option<f64>)>>;

fn check_disjoint(a: &EventLog, b: &EventLog, what: &str) -> Result<(), TrainError> {
    let ids: HashSet<&str> = a.traces.iter().map(|t| t.case_id.as_str()).collect();
    for trace in &b.traces {
        if ids.contains(trace.case_id.as_str()) {
            return Err(TrainError::SplitLeak(format!(
                "case `{}` appears in both {what}",
                trace.case_id
            )));
        }
    }
    Ok(())
}

/// Metrics of one trained model on prebuilt per-strategy test graphs.
fn score_model(
    params: &ModelParams,
    cfg: &ModelConfig,
    enc: &EncoderSet,
    test_variants: &[(String, Vec<HeteroGraph>)],
) -> Result<RunMetrics, TrainError> {
    let mut out = RunMetrics::new();
    for (strategy, graphs) in test_variants {
        let mut class_pairs: Vec<(Vec<usize>, Vec<usize>)> =
            vec![(Vec::new(), Vec::new()); enc.n_attributes()];
        let mut value_pairs: Vec<(Vec<f64>, Vec<f64>)> =
            vec![(Vec::new(), Vec::new()); enc.n_attributes()];

        for chunk in graphs.chunks(EVAL_BATCH) {
            let refs: Vec<&HeteroGraph> = chunk.iter().collect();
            let batch = batch_graphs(&refs)?;
            let nodes = predict_batch(&batch, params, cfg, enc)?;
            // Predictions come out in (attribute, masked-row) order, exactly
            // the order the batch targets are stored in.
            let mut cursor = vec![0usize; enc.n_attributes()];
            for node in nodes {
                let i = cursor[node.attr];
                cursor[node.attr] += 1;
                match (&node.prediction, &batch.targets[node.attr]) {
                    (NodePrediction::Class(pred), Targets::Classes(truth)) => {
                        let missing = enc.missing_index(node.attr).expect("categorical");
                        if truth[i] != missing {
                            class_pairs[node.attr].0.push(*pred);
                            class_pairs[node.attr].1.push(truth[i]);
                        }
                    }
                    (NodePrediction::Value(pred), Targets::Values(truth)) => {
                        if truth[i] != MISSING_NUMERIC {
                            value_pairs[node.attr].0.push(*pred);
                            value_pairs[node.attr].1.push(truth[i]);
                        }
                    }
                    _ => unreachable!("prediction kind always matches target kind"),
                }
            }
        }

        let mut per_attr = BTreeMap::new();
        for (attr, attribute) in enc.schema.attributes.iter().enumerate() {
            let (value, raw) = if enc.is_categorical(attr) {
                let (preds, truth) = &class_pairs[attr];
                (accuracy(preds, truth)?, None)
            } else {
                let (preds, truth) = &value_pairs[attr];
                let normalized = mae(preds, truth)?;
                let raw = if attribute.kind == AttrKind::Timestamp {
                    let raw_preds: Vec<f64> =
                        preds.iter().map(|&v| enc.decode_numeric(v)).collect();
                    let raw_truth: Vec<f64> =
                        truth.iter().map(|&v| enc.decode_numeric(v)).collect();
                    Some(mae(&raw_preds, &raw_truth)?)
                } else {
                    None
                };
                (normalized, raw)
            };
            per_attr.insert(attribute.name.clone(), (value, raw));
        }
        out.insert(strategy.clone(), per_attr);
    }
    Ok(out)
}

/// Trains `n_runs` models with seeds `base + run` and evaluates each on the
/// four per-strategy damaged variants of the test split, separately.
///
/// The damaged variants and the expanded train/validation graphs are fixed
/// by the base seed; only model initialization and batch shuffling vary
/// between runs. Runs execute in parallel when `parallel` is set; the
/// report is identical either way.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_multi_run(
    train: &EventLog,
    val: &EventLog,
    test: &EventLog,
    enc: &EncoderSet,
    train_cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    n_runs: usize,
    random_p: f64,
    parallel: bool,
) -> Result<RunReport, TrainError> {
    if n_runs == 0 {
        return Err(TrainError::InvalidConfig("n_runs must be at least 1".into()));
    }
    if test.n_traces() == 0 {
        return Err(TrainError::EmptySplit("test"));
    }
    check_disjoint(train, test, "train and test")?;
    check_disjoint(val, test, "validation and test")?;
    check_disjoint(train, val, "train and validation")?;

    let started = Instant::now();
    let strategies = standard_strategies(random_p)?;

    let train_graphs = expand_with_strategies(train, enc, &strategies, train_cfg.seed)?;
    let val_graphs =
        expand_with_strategies(val, enc, &strategies, derive_seed(train_cfg.seed, 0x7a1, 0))?;

    // One damaged variant of the test split per strategy, fixed across runs.
    let mut test_variants = Vec::with_capacity(strategies.len());
    for (si, strategy) in strategies.iter().enumerate() {
        let graphs = expand_with_strategies(
            test,
            enc,
            std::slice::from_ref(&strategies[si]),
            derive_seed(train_cfg.seed, 0x7e57, 0),
        )?;
        test_variants.push((strategy.name().to_string(), graphs));
    }

    let run_one = |run: usize| -> Result<(TrainHistory, RunMetrics), TrainError> {
        let cfg = TrainConfig { seed: train_cfg.seed + run as u64, ..train_cfg.clone() };
        let (params, history) =
            train_on_graphs(&train_graphs, &val_graphs, enc, &cfg, model_cfg)
                .map_err(|e| TrainError::RunFailed { run, source: Box::new(e) })?;
        let effective = ModelConfig {
            aggregator: cfg.aggregator.clone(),
            seed: cfg.seed,
            ..model_cfg.clone()
        };
        let metrics = score_model(&params, &effective, enc, &test_variants)
            .map_err(|e| TrainError::RunFailed { run, source: Box::new(e) })?;
        Ok((history, metrics))
    };

    let results: Vec<Result<(TrainHistory, RunMetrics), TrainError>> = if parallel {
        (0..n_runs).into_par_iter().map(run_one).collect()
    } else {
        (0..n_runs).map(run_one).collect()
    };

    let mut histories = Vec::with_capacity(n_runs);
    let mut per_run = Vec::with_capacity(n_runs);
    for result in results {
        let (history, metrics) = result?;
        histories.push(history);
        per_run.push(metrics);
    }

    let mut strategies_out: BTreeMap<String, BTreeMap<String, MetricSummary>> = BTreeMap::new();
    for (strategy_name, _) in &test_variants {
        let mut per_attr = BTreeMap::new();
        for (attr, attribute) in enc.schema.attributes.iter().enumerate() {
            let runs: Vec<f64> = per_run
                .iter()
                .map(|m| m[strategy_name][&attribute.name].0)
                .collect();
            let raw_runs: Vec<f64> = per_run
                .iter()
                .filter_map(|m| m[strategy_name][&attribute.name].1)
                .collect();
            let (mean, std) = mean_std(&runs);
            let raw_seconds = (!raw_runs.is_empty()).then(|| {
                let (mean, std) = mean_std(&raw_runs);
                RawSeconds { mean, std }
            });
            per_attr.insert(
                attribute.name.clone(),
                MetricSummary {
                    metric: if enc.is_categorical(attr) { "accuracy" } else { "mae" }.into(),
                    mean,
                    std,
                    runs,
                    raw_seconds,
                },
            );
        }
        strategies_out.insert(strategy_name.clone(), per_attr);
    }

    Ok(RunReport {
        strategies: strategies_out,
        histories,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}
