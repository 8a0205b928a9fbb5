//! Trace-to-graph encoding: attribute encoders fitted on training data,
//! event masking strategies, heterogeneous graph construction and
//! disjoint-union batching.

mod batch;
mod encoders;
mod error;
mod graph;
mod masking;

pub use batch::{batch_graphs, unbatch, GraphBatch};
pub use encoders::{
    cell_is_missing, derived_value, AttrEncoder, CellView, EncoderSet, MISSING_CLASS,
    MISSING_NUMERIC,
};
pub use error::EncodeError;
pub use graph::{build_graph, EdgeList, HeteroGraph, Relation, RelationKind, RelationTable, Targets};
pub use masking::{
    apply_mask, coverage_check, derive_seed, max_missing_run, standard_strategies,
    strategy_by_name, EvenMask, ExplicitMask, MaskStrategy, OddMask, RandomMask, WindowMask,
    STRATEGY_NAMES,
};
