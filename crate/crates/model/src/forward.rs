//! Forward pass and loss of the heterogeneous network.
//!
//! Each attribute's one-hot (or scalar) features are projected into the
//! shared hidden space, then K message-passing layers run one convolution
//! per relation: `out = h_dst * W_self + aggregate(h_src) * W_neigh + b`,
//! summed over the relations targeting each attribute, rectified between
//! layers. Heads apply only to rows flagged for repair.

use std::rc::Rc;

use logmend_encode::{GraphBatch, Targets};
use logmend_tensor::{aggregate_kernel, AggregateKernel, Tape, Tensor, Value};

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::params::{ModelParams, RelationWeights};

use std::sync::Arc;

/// Where a prediction row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowRef {
    pub graph: usize,
    pub event: usize,
}

/// Head output for one attribute: logits (categorical) or a scalar column
/// (numeric), one row per masked node.
pub struct PredictionBlock {
    pub output: Value,
    pub rows: Vec<RowRef>,
    pub categorical: bool,
}

/// Per-attribute prediction blocks; `None` when the attribute has no masked
/// rows in the batch.
pub struct Predictions {
    pub blocks: Vec<Option<PredictionBlock>>,
}

impl Predictions {
    pub fn total_rows(&self) -> usize {
        self.blocks
            .iter()
            .flatten()
            .map(|b| b.rows.len())
            .sum()
    }
}

fn check_batch(batch: &GraphBatch, params: &ModelParams) -> Result<(), ModelError> {
    if batch.relations.as_ref() != &params.relations {
        return Err(ModelError::SchemaMismatch(
            "batch relation table differs from the model's".into(),
        ));
    }
    if batch.n_attributes() != params.input.len() {
        return Err(ModelError::SchemaMismatch(format!(
            "batch has {} attributes, model expects {}",
            batch.n_attributes(),
            params.input.len()
        )));
    }
    for attr in 0..batch.n_attributes() {
        let expected = params.set.get(params.input[attr].weight).value.rows();
        if batch.features[attr].cols() != expected {
            return Err(ModelError::SchemaMismatch(format!(
                "attribute {attr} has width {}, model expects {expected}",
                batch.features[attr].cols()
            )));
        }
    }
    Ok(())
}

/// One message-passing layer over every relation.
///
/// `hidden` holds one value per attribute, row-aligned with the batch's node
/// tables. Relations targeting the same attribute sum their outputs; nodes
/// without incoming edges keep the self term (empty neighborhoods aggregate
/// to zero).
pub fn sage_layer(
    tape: &mut Tape,
    hidden: &[Value],
    batch: &GraphBatch,
    layer: &[RelationWeights],
    params: &ModelParams,
    kernel: &Arc<dyn AggregateKernel>,
    rectify: bool,
) -> Result<Vec<Value>, ModelError> {
    let n_attrs = hidden.len();
    let mut out: Vec<Option<Value>> = vec![None; n_attrs];

    for (r, relation) in params.relations.relations.iter().enumerate() {
        let weights = &layer[r];
        let dst = relation.dst_attr;

        let w_self = tape.param(&params.set, weights.w_self);
        let self_term = tape.matmul(hidden[dst], w_self)?;

        let agg = tape.aggregate(
            hidden[relation.src_attr],
            Rc::clone(&batch.neighbor_groups[r]),
            Arc::clone(kernel),
        )?;
        let w_neigh = tape.param(&params.set, weights.w_neigh);
        let neigh_term = tape.matmul(agg, w_neigh)?;

        let bias = tape.param(&params.set, weights.bias);
        let mut contribution = tape.add(self_term, neigh_term)?;
        contribution = tape.add(contribution, bias)?;

        out[dst] = Some(match out[dst] {
            Some(existing) => tape.add(existing, contribution)?,
            None => contribution,
        });
    }

    let mut result = Vec::with_capacity(n_attrs);
    for (attr, slot) in out.into_iter().enumerate() {
        // Every attribute is targeted by at least its own chain relations.
        let value = slot.unwrap_or(hidden[attr]);
        result.push(if rectify { tape.relu(value) } else { value });
    }
    Ok(result)
}

/// Runs the full network over a batch: input projections, K layers, then
/// per-attribute heads on the masked rows only.
pub fn forward(
    tape: &mut Tape,
    batch: &GraphBatch,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<Predictions, ModelError> {
    check_batch(batch, params)?;
    let kernel = aggregate_kernel(&cfg.aggregator)?;

    let mut hidden = Vec::with_capacity(batch.n_attributes());
    for attr in 0..batch.n_attributes() {
        let features = tape.constant(batch.features[attr].clone());
        let weight = tape.param(&params.set, params.input[attr].weight);
        let bias = tape.param(&params.set, params.input[attr].bias);
        let projected = tape.matmul(features, weight)?;
        hidden.push(tape.add(projected, bias)?);
    }

    let n_layers = params.n_layers();
    for (k, layer) in params.layers.iter().enumerate() {
        let rectify = k + 1 < n_layers;
        hidden = sage_layer(tape, &hidden, batch, layer, params, &kernel, rectify)?;
    }

    let mut blocks = Vec::with_capacity(batch.n_attributes());
    for (attr, &hidden_table) in hidden.iter().enumerate() {
        let masked_rows: Vec<usize> = batch.masks[attr]
            .iter()
            .enumerate()
            .filter_map(|(row, &m)| m.then_some(row))
            .collect();
        if masked_rows.is_empty() {
            blocks.push(None);
            continue;
        }
        let rows: Vec<RowRef> = masked_rows
            .iter()
            .map(|&row| {
                let (graph, event) = batch.provenance(row);
                RowRef { graph, event }
            })
            .collect();
        let gathered = tape.gather_rows(hidden_table, Rc::new(masked_rows))?;
        let weight = tape.param(&params.set, params.heads[attr].weight);
        let bias = tape.param(&params.set, params.heads[attr].bias);
        let projected = tape.matmul(gathered, weight)?;
        let output = tape.add(projected, bias)?;
        blocks.push(Some(PredictionBlock {
            output,
            rows,
            categorical: matches!(batch.targets[attr], Targets::Classes(_)),
        }));
    }

    Ok(Predictions { blocks })
}

/// Sum over categorical attributes of the per-attribute mean cross-entropy
/// plus sum over numeric attributes of the per-attribute mean absolute
/// error. Attributes without masked rows contribute nothing.
pub fn compute_loss(
    tape: &mut Tape,
    preds: &Predictions,
    batch: &GraphBatch,
) -> Result<Value, ModelError> {
    let mut total: Option<Value> = None;
    for (attr, block) in preds.blocks.iter().enumerate() {
        let Some(block) = block else {
            continue;
        };
        let term = match &batch.targets[attr] {
            Targets::Classes(classes) => {
                tape.softmax_cross_entropy(block.output, Rc::new(classes.clone()))?
            }
            Targets::Values(values) => {
                let target = Tensor::new(values.len(), 1, values.clone())?;
                tape.l1_loss(block.output, Rc::new(target))?
            }
        };
        total = Some(match total {
            Some(acc) => tape.add(acc, term)?,
            None => term,
        });
    }
    Ok(total.unwrap_or_else(|| tape.constant(Tensor::scalar(0.0))))
}

/// Forward plus loss in one call.
pub fn loss_on_batch(
    tape: &mut Tape,
    batch: &GraphBatch,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<Value, ModelError> {
    let preds = forward(tape, batch, params, cfg)?;
    compute_loss(tape, &preds, batch)
}
