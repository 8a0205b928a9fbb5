//! End-to-end log repair: fill every missing cell of a damaged log.

use logmend_encode::{build_graph, EncoderSet};
use logmend_log::{AttrScope, Cell, EventLog, Trace};
use logmend_model::{predict_repair, ModelConfig, ModelParams, RepairedValue};

use crate::error::TrainError;

fn render(value: RepairedValue) -> String {
    match value {
        RepairedValue::Category(s) => s,
        RepairedValue::Number(x) => x.to_string(),
        RepairedValue::Timestamp(ts) => ts.format("%Y-%m-%d %H:%M:%S%.6f+00:00").to_string(),
    }
}

/// Fills a trace-scoped attribute from a present sibling value when one
/// exists; trace attributes are constant within a case by definition.
fn sibling_value(trace: &Trace, attr: usize) -> Option<String> {
    trace
        .events
        .iter()
        .find_map(|e| e.cell(attr).as_str().map(str::to_string))
}

/// Repairs every missing cell using model predictions. Present cells are
/// never modified; running repair twice is a no-op after the first pass.
pub fn repair_log(
    damaged: &EventLog,
    params: &ModelParams,
    cfg: &ModelConfig,
    enc: &EncoderSet,
) -> Result<EventLog, TrainError> {
    if damaged.schema != enc.schema {
        return Err(logmend_model::ModelError::SchemaMismatch(
            "damaged log schema differs from the encoders'".into(),
        )
        .into());
    }

    let mut repaired = damaged.clone();
    for trace in &mut repaired.traces {
        let has_missing = trace
            .events
            .iter()
            .any(|e| e.cells.iter().any(Cell::is_missing));
        if !has_missing {
            continue;
        }

        // Trace-scoped attributes: copy the constant value when the trace
        // still holds it somewhere.
        for (attr, attribute) in enc.schema.attributes.iter().enumerate() {
            if attribute.scope != AttrScope::Trace {
                continue;
            }
            if let Some(value) = sibling_value(trace, attr) {
                for event in &mut trace.events {
                    if event.cells[attr].is_missing() {
                        event.cells[attr] = Cell::Present(value.clone());
                    }
                }
            }
        }

        // Everything still missing goes through the model; the graph's masks
        // come from the missing cells themselves (the event mask is empty).
        let no_event_mask = vec![false; trace.len()];
        let graph = build_graph(trace, &no_event_mask, enc)?;
        if graph.masks.iter().all(|m| m.iter().all(|&f| !f)) {
            continue;
        }
        let predictions = predict_repair(&graph, params, cfg, enc)?;

        // Trace-scoped attributes repaired by the model get one value for
        // the whole trace (the first predicted position wins).
        let mut trace_fill: Vec<Option<String>> = vec![None; enc.n_attributes()];
        for (event, attr, value) in predictions {
            if !trace.events[event].cells[attr].is_missing() {
                continue;
            }
            let rendered = render(value);
            if enc.schema.attributes[attr].scope == AttrScope::Trace {
                let fill = trace_fill[attr].get_or_insert(rendered);
                trace.events[event].cells[attr] = Cell::Present(fill.clone());
            } else {
                trace.events[event].cells[attr] = Cell::Present(rendered);
            }
        }
    }
    Ok(repaired)
}
