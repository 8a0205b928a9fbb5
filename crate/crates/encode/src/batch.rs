//! Disjoint-union batching of trace graphs.

use std::rc::Rc;
use std::sync::Arc;

use chrono::{DateTime, Utc};

use logmend_tensor::Tensor;

use crate::error::EncodeError;
use crate::graph::{EdgeList, HeteroGraph, RelationTable, Targets};

/// Disjoint union of k trace graphs: per-attribute feature tables stacked
/// with shared row offsets (every attribute has one row per event), edge
/// lists shifted by those offsets, masks and targets concatenated.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub trace_lens: Vec<usize>,
    /// Prefix sums of trace lengths; row r of any attribute belongs to the
    /// graph g with offsets[g] <= r < offsets[g + 1].
    pub offsets: Vec<usize>,
    pub features: Vec<Tensor>,
    pub masks: Vec<Vec<bool>>,
    pub targets: Vec<Targets>,
    pub relations: Arc<RelationTable>,
    pub edges: Vec<EdgeList>,
    /// Per relation: incoming source rows per destination row, precomputed
    /// once per batch for the aggregation kernels.
    pub neighbor_groups: Vec<Rc<Vec<Vec<usize>>>>,
    anchors: Vec<Option<DateTime<Utc>>>,
}

impl GraphBatch {
    pub fn n_graphs(&self) -> usize {
        self.trace_lens.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.features.len()
    }

    pub fn total_rows(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Graph id owning a row.
    pub fn graph_of_row(&self, row: usize) -> usize {
        match self.offsets.binary_search(&row) {
            Ok(g) => g,
            Err(g) => g - 1,
        }
    }

    /// (graph id, event index) of a row.
    pub fn provenance(&self, row: usize) -> (usize, usize) {
        let g = self.graph_of_row(row);
        (g, row - self.offsets[g])
    }
}

/// Concatenates graphs into one batch. All graphs must share the relation
/// table and per-attribute feature widths.
pub fn batch_graphs(graphs: &[&HeteroGraph]) -> Result<GraphBatch, EncodeError> {
    let first = graphs
        .first()
        .ok_or_else(|| EncodeError::SchemaMismatch("cannot batch zero graphs".into()))?;
    let n_attrs = first.n_attributes();
    let relations = Arc::clone(&first.relations);

    for g in graphs {
        if g.relations.as_ref() != relations.as_ref() {
            return Err(EncodeError::SchemaMismatch("relation tables differ".into()));
        }
        if g.n_attributes() != n_attrs {
            return Err(EncodeError::SchemaMismatch("attribute counts differ".into()));
        }
        for attr in 0..n_attrs {
            if g.features[attr].cols() != first.features[attr].cols() {
                return Err(EncodeError::SchemaMismatch(format!(
                    "feature width of attribute {attr} differs"
                )));
            }
        }
    }

    let mut offsets = Vec::with_capacity(graphs.len() + 1);
    offsets.push(0);
    for g in graphs {
        offsets.push(offsets.last().unwrap() + g.trace_len);
    }
    let total_rows = *offsets.last().unwrap();

    let mut features = Vec::with_capacity(n_attrs);
    let mut masks = Vec::with_capacity(n_attrs);
    let mut targets = Vec::with_capacity(n_attrs);
    for attr in 0..n_attrs {
        let cols = first.features[attr].cols();
        let mut data = Vec::with_capacity(total_rows * cols);
        let mut mask = Vec::with_capacity(total_rows);
        let categorical = matches!(first.targets[attr], Targets::Classes(_));
        let mut classes = Vec::new();
        let mut values = Vec::new();
        for g in graphs {
            data.extend_from_slice(g.features[attr].data());
            mask.extend_from_slice(&g.masks[attr]);
            match (&g.targets[attr], categorical) {
                (Targets::Classes(c), true) => classes.extend_from_slice(c),
                (Targets::Values(v), false) => values.extend_from_slice(v),
                _ => return Err(EncodeError::SchemaMismatch(format!(
                    "attribute {attr} mixes categorical and numeric targets"
                ))),
            }
        }
        features.push(Tensor::new(total_rows, cols, data)?);
        masks.push(mask);
        targets.push(if categorical { Targets::Classes(classes) } else { Targets::Values(values) });
    }

    let mut edges = vec![EdgeList::default(); relations.len()];
    for (gi, g) in graphs.iter().enumerate() {
        let offset = offsets[gi];
        for (r, list) in g.edges.iter().enumerate() {
            for k in 0..list.len() {
                edges[r].src.push(list.src[k] + offset);
                edges[r].dst.push(list.dst[k] + offset);
            }
        }
    }

    let neighbor_groups = edges
        .iter()
        .map(|list| {
            let mut groups = vec![Vec::new(); total_rows];
            for k in 0..list.len() {
                groups[list.dst[k]].push(list.src[k]);
            }
            Rc::new(groups)
        })
        .collect();

    Ok(GraphBatch {
        trace_lens: graphs.iter().map(|g| g.trace_len).collect(),
        offsets,
        features,
        masks,
        targets,
        relations,
        edges,
        neighbor_groups,
        anchors: graphs.iter().map(|g| g.anchor).collect(),
    })
}

/// Splits a batch back into its member graphs.
pub fn unbatch(batch: &GraphBatch) -> Vec<HeteroGraph> {
    let n_attrs = batch.n_attributes();
    let mut out = Vec::with_capacity(batch.n_graphs());
    for (gi, &len) in batch.trace_lens.iter().enumerate() {
        let start = batch.offsets[gi];
        let end = start + len;

        let mut features = Vec::with_capacity(n_attrs);
        let mut masks = Vec::with_capacity(n_attrs);
        let mut targets = Vec::with_capacity(n_attrs);
        for attr in 0..n_attrs {
            let cols = batch.features[attr].cols();
            let data = batch.features[attr].data()[start * cols..end * cols].to_vec();
            features.push(Tensor::new(len, cols, data).expect("slice length matches"));
            let mask = batch.masks[attr][start..end].to_vec();

            // Count masked rows before this graph to slice the targets.
            let before = batch.masks[attr][..start].iter().filter(|&&m| m).count();
            let inside = mask.iter().filter(|&&m| m).count();
            targets.push(match &batch.targets[attr] {
                Targets::Classes(c) => Targets::Classes(c[before..before + inside].to_vec()),
                Targets::Values(v) => Targets::Values(v[before..before + inside].to_vec()),
            });
            masks.push(mask);
        }

        let mut edges = vec![EdgeList::default(); batch.relations.len()];
        for (r, list) in batch.edges.iter().enumerate() {
            for k in 0..list.len() {
                let (u, v) = (list.src[k], list.dst[k]);
                if u >= start && u < end {
                    debug_assert!(v >= start && v < end, "edges never cross graphs");
                    edges[r].src.push(u - start);
                    edges[r].dst.push(v - start);
                }
            }
        }

        out.push(HeteroGraph {
            trace_len: len,
            features,
            masks,
            targets,
            relations: Arc::clone(&batch.relations),
            edges,
            anchor: batch.anchors[gi],
        });
    }
    out
}
