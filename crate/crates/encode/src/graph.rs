//! Heterogeneous trace graphs.
//!
//! A trace of m events with n attributes becomes m*n nodes: one node per
//! attribute per event. Nodes of the same attribute are chained along the
//! event order; activity nodes additionally connect to every other attribute
//! of the same event. Each forward relation has a distinct reverse relation
//! so both directions carry their own convolution parameters.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use logmend_log::{AttributeSchema, Trace};
use logmend_tensor::Tensor;

use crate::encoders::{derived_value, CellView, EncoderSet};
use crate::error::EncodeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    /// attr_i -> attr_{i+1}
    ChainForward,
    /// attr_{i+1} -> attr_i
    ChainReverse,
    /// activity_i -> attr_i
    SpokeForward,
    /// attr_i -> activity_i
    SpokeReverse,
}

/// One typed directed relation between attribute node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub src_attr: usize,
    pub dst_attr: usize,
    pub kind: RelationKind,
}

impl Relation {
    pub fn label(&self, schema: &AttributeSchema) -> String {
        let src = &schema.attributes[self.src_attr].name;
        let dst = &schema.attributes[self.dst_attr].name;
        match self.kind {
            RelationKind::ChainForward => format!("{src}->next"),
            RelationKind::ChainReverse => format!("{src}->prev"),
            RelationKind::SpokeForward => format!("{src}->{dst}"),
            RelationKind::SpokeReverse => format!("{src}->{dst}"),
        }
    }
}

/// The relation set is a pure function of the schema: a chain per attribute,
/// a spoke from the activity to every other attribute, and a reverse for
/// each. For n attributes that is 4n - 2 relations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTable {
    pub relations: Vec<Relation>,
}

impl RelationTable {
    pub fn for_schema(schema: &AttributeSchema) -> Self {
        let n = schema.n_attributes();
        let activity = schema.activity_index();
        let mut relations = Vec::with_capacity(4 * n - 2);
        for attr in 0..n {
            relations.push(Relation { src_attr: attr, dst_attr: attr, kind: RelationKind::ChainForward });
        }
        for attr in 0..n {
            if attr != activity {
                relations.push(Relation { src_attr: activity, dst_attr: attr, kind: RelationKind::SpokeForward });
            }
        }
        for attr in 0..n {
            relations.push(Relation { src_attr: attr, dst_attr: attr, kind: RelationKind::ChainReverse });
        }
        for attr in 0..n {
            if attr != activity {
                relations.push(Relation { src_attr: attr, dst_attr: activity, kind: RelationKind::SpokeReverse });
            }
        }
        Self { relations }
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
}

impl EdgeList {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    fn push(&mut self, src: usize, dst: usize) {
        self.src.push(src);
        self.dst.push(dst);
    }
}

/// Ground truth recorded for the masked rows of one attribute, in ascending
/// event order.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(v) => v.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One trace encoded as typed node-feature tables, typed edge lists, repair
/// masks and ground-truth targets.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    pub trace_len: usize,
    /// Per attribute: trace_len x width feature table built from the masked
    /// view of the trace.
    pub features: Vec<Tensor>,
    /// Per attribute: which events need repair (event mask united with cells
    /// already missing in the data).
    pub masks: Vec<Vec<bool>>,
    /// Per attribute: pre-mask ground truth for the masked rows.
    pub targets: Vec<Targets>,
    pub relations: Arc<RelationTable>,
    pub edges: Vec<EdgeList>,
    /// Reference timestamp for decoding elapsed-seconds predictions.
    pub anchor: Option<DateTime<Utc>>,
}

impl HeteroGraph {
    pub fn n_attributes(&self) -> usize {
        self.features.len()
    }

    /// m x n: one node per attribute per event.
    pub fn node_count(&self) -> usize {
        self.trace_len * self.n_attributes()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(EdgeList::len).sum()
    }

    /// Event indices flagged for repair for an attribute.
    pub fn masked_events(&self, attr: usize) -> Vec<usize> {
        self.masks[attr]
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }
}

/// Builds the heterogeneous graph of one trace under an event-removal mask.
///
/// Masked positions never read the true value into features; the truth is
/// recorded separately in `targets`.
pub fn build_graph(
    trace: &Trace,
    mask: &[bool],
    enc: &EncoderSet,
) -> Result<HeteroGraph, EncodeError> {
    if mask.len() != trace.len() {
        return Err(EncodeError::LengthMismatch { mask: mask.len(), trace: trace.len() });
    }
    let schema = &enc.schema;
    let n_attrs = schema.n_attributes();
    let len = trace.len();

    let mut features = Vec::with_capacity(n_attrs);
    let mut masks = Vec::with_capacity(n_attrs);
    let mut targets = Vec::with_capacity(n_attrs);

    for attr in 0..n_attrs {
        let categorical = enc.is_categorical(attr);
        let mut table = Vec::with_capacity(len);
        let mut attr_mask = Vec::with_capacity(len);
        let mut class_targets = Vec::new();
        let mut value_targets = Vec::new();

        for (event_idx, &event_removed) in mask.iter().enumerate() {
            let cell = trace.events[event_idx].cell(attr);
            let flagged = event_removed || cell.is_missing();
            attr_mask.push(flagged);

            let row = if categorical {
                let view = if flagged { None } else { cell.as_str() };
                enc.encode_value(attr, CellView::Categorical(view))?
            } else {
                let view = if flagged { None } else { derived_value(trace, schema, attr, event_idx) };
                enc.encode_value(attr, CellView::Numeric(view))?
            };
            table.push(row);

            if flagged {
                if categorical {
                    let class = match cell.as_str() {
                        Some(v) => enc.class_index(attr, v).expect("categorical attr"),
                        None => enc.missing_index(attr).expect("categorical attr"),
                    };
                    class_targets.push(class);
                } else {
                    let value = match derived_value(trace, schema, attr, event_idx) {
                        Some(raw) => enc.encode_value(attr, CellView::Numeric(Some(raw)))?[0],
                        None => crate::encoders::MISSING_NUMERIC,
                    };
                    value_targets.push(value);
                }
            }
        }

        features.push(Tensor::from_rows(&table)?);
        masks.push(attr_mask);
        targets.push(if categorical {
            Targets::Classes(class_targets)
        } else {
            Targets::Values(value_targets)
        });
    }

    let relations = Arc::new(RelationTable::for_schema(schema));
    let mut edges = vec![EdgeList::default(); relations.len()];
    for (r, relation) in relations.relations.iter().enumerate() {
        match relation.kind {
            RelationKind::ChainForward => {
                for i in 0..len.saturating_sub(1) {
                    edges[r].push(i, i + 1);
                }
            }
            RelationKind::ChainReverse => {
                for i in 0..len.saturating_sub(1) {
                    edges[r].push(i + 1, i);
                }
            }
            RelationKind::SpokeForward | RelationKind::SpokeReverse => {
                for i in 0..len {
                    edges[r].push(i, i);
                }
            }
        }
    }

    Ok(HeteroGraph {
        trace_len: len,
        features,
        masks,
        targets,
        relations,
        edges,
        anchor: trace.anchor_timestamp(schema),
    })
}
