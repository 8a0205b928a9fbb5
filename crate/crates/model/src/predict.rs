//! Repair prediction and decoding.

use chrono::{DateTime, TimeDelta, Utc};

use logmend_encode::{batch_graphs, EncoderSet, GraphBatch, HeteroGraph};
use logmend_tensor::Tape;

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::forward::forward;
use crate::params::ModelParams;

/// Model output for one masked node, still in encoding space.
#[derive(Debug, Clone, PartialEq)]
pub enum NodePrediction {
    /// Chosen vocabulary index (the missing class is never chosen).
    Class(usize),
    /// Normalized (log1p) regression output.
    Value(f64),
}

/// A masked node's prediction with its position.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedNode {
    pub graph: usize,
    pub event: usize,
    pub attr: usize,
    pub prediction: NodePrediction,
}

/// Decoded repair for one cell of a trace.
#[derive(Debug, Clone, PartialEq)]
pub enum RepairedValue {
    Category(String),
    Number(f64),
    Timestamp(DateTime<Utc>),
}

/// Argmax over a logit row excluding the reserved missing class (the last
/// index); ties resolve to the lowest index.
pub fn repair_argmax(logits: &[f64], missing_index: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &v) in logits.iter().enumerate() {
        if i == missing_index {
            continue;
        }
        if v > best_value {
            best_value = v;
            best = i;
        }
    }
    best
}

/// Runs inference over a batch and returns one prediction per masked node,
/// in (attribute, row) order.
pub fn predict_batch(
    batch: &GraphBatch,
    params: &ModelParams,
    cfg: &ModelConfig,
    enc: &EncoderSet,
) -> Result<Vec<MaskedNode>, ModelError> {
    let mut tape = Tape::new();
    let preds = forward(&mut tape, batch, params, cfg)?;
    let mut out = Vec::new();
    for (attr, block) in preds.blocks.iter().enumerate() {
        let Some(block) = block else {
            continue;
        };
        let output = tape.value(block.output);
        for (i, row_ref) in block.rows.iter().enumerate() {
            let prediction = if block.categorical {
                let missing = enc.missing_index(attr).expect("categorical attribute");
                NodePrediction::Class(repair_argmax(output.row(i), missing))
            } else {
                NodePrediction::Value(output.get(i, 0))
            };
            out.push(MaskedNode {
                graph: row_ref.graph,
                event: row_ref.event,
                attr,
                prediction,
            });
        }
    }
    Ok(out)
}

/// Predicts repaired values for every masked node of one graph.
///
/// Categorical nodes decode to their vocabulary string; numeric nodes invert
/// the log transform (clamped at zero); timestamp nodes reconstruct as the
/// trace anchor plus the predicted elapsed seconds.
pub fn predict_repair(
    graph: &HeteroGraph,
    params: &ModelParams,
    cfg: &ModelConfig,
    enc: &EncoderSet,
) -> Result<Vec<(usize, usize, RepairedValue)>, ModelError> {
    let batch = batch_graphs(&[graph])?;
    let nodes = predict_batch(&batch, params, cfg, enc)?;
    let anchor = graph.anchor.unwrap_or(DateTime::<Utc>::UNIX_EPOCH);

    let mut out = Vec::with_capacity(nodes.len());
    for node in nodes {
        let value = match node.prediction {
            NodePrediction::Class(class) => {
                let vocab = enc.vocab(node.attr).expect("categorical attribute");
                RepairedValue::Category(vocab[class].clone())
            }
            NodePrediction::Value(normalized) => {
                let raw = enc.decode_numeric(normalized);
                if enc.schema.attributes[node.attr].kind == logmend_log::AttrKind::Timestamp {
                    let millis = (raw * 1000.0).round() as i64;
                    RepairedValue::Timestamp(anchor + TimeDelta::milliseconds(millis))
                } else {
                    RepairedValue::Number(raw)
                }
            }
        };
        out.push((node.event, node.attr, value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_excludes_the_missing_class() {
        // MISSING (index 3) has the largest logit but cannot be chosen.
        let logits = [0.1, 2.0, 0.3, 5.0];
        assert_eq!(repair_argmax(&logits, 3), 1);
    }

    #[test]
    fn argmax_tie_takes_the_lowest_index() {
        let logits = [1.0, 2.0, 2.0, 0.0];
        assert_eq!(repair_argmax(&logits, 3), 1);
    }

    #[test]
    fn numeric_decode_of_zero_is_zero() {
        assert_eq!(0.0_f64.exp_m1().max(0.0), 0.0);
    }
}
