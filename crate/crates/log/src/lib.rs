//! Event-log data model, CSV ingestion and emission, schema inference,
//! deterministic splitting and synthetic log generation.

mod csv_io;
mod error;
mod event;
mod infer;
mod schema;
mod split;
mod synth;

pub use csv_io::{parse_csv_log, write_csv_log, CsvOptions};
pub use error::LogError;
pub use event::{parse_timestamp, Cell, Event, EventLog, Trace};
pub use infer::{infer_schema, SchemaHints};
pub use schema::{AttrKind, AttrScope, Attribute, AttributeSchema};
pub use split::split_log;
pub use synth::{generate_synthetic_log, linear_chain_spec, AttrRuleSpec, EdgeSpec, ProcessSpec};
