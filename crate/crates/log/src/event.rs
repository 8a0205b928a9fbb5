//! Events, traces and event logs.
//!
//! Cells keep their raw string form so writing a log back out reproduces the
//! input byte for byte; typed views are parsed on demand.

use chrono::{DateTime, NaiveDateTime, Utc};

use crate::error::LogError;
use crate::schema::{AttrKind, AttrScope, AttributeSchema};

/// One value slot of an event. `Present` keeps the raw text as read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Missing,
    Present(String),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Missing => None,
            Cell::Present(s) => Some(s),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        self.as_str().and_then(|s| s.parse::<f64>().ok())
    }

    pub fn as_timestamp(&self) -> Option<DateTime<Utc>> {
        self.as_str().and_then(parse_timestamp)
    }
}

/// Parses RFC 3339 or `YYYY-MM-DD HH:MM:SS[.fff]` with optional offset.
/// Offset-less values are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(dt) = DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f%:z") {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(naive.and_utc());
        }
    }
    None
}

/// One event; cells are aligned with the schema's attribute order.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub cells: Vec<Cell>,
}

impl Event {
    pub fn cell(&self, attr_index: usize) -> &Cell {
        &self.cells[attr_index]
    }

    pub fn fully_missing(&self) -> bool {
        self.cells.iter().all(Cell::is_missing)
    }
}

/// Timestamp-ordered sequence of events sharing one case id.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Earliest present timestamp of the schema timestamp column, used as the
    /// reference point for elapsed-time features.
    pub fn anchor_timestamp(&self, schema: &AttributeSchema) -> Option<DateTime<Utc>> {
        let ts_idx = schema.timestamp_index();
        self.events.iter().find_map(|e| e.cell(ts_idx).as_timestamp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub schema: AttributeSchema,
    pub traces: Vec<Trace>,
}

impl EventLog {
    pub fn n_traces(&self) -> usize {
        self.traces.len()
    }

    pub fn n_events(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    /// Checks every structural invariant: unique case ids, non-empty traces,
    /// aligned cell counts, timestamp ordering, constant trace attributes.
    pub fn validate(&self) -> Result<(), LogError> {
        self.schema.validate()?;
        let mut case_ids = std::collections::HashSet::new();
        let ts_idx = self.schema.timestamp_index();
        for trace in &self.traces {
            if !case_ids.insert(trace.case_id.as_str()) {
                return Err(LogError::InvalidSchema(format!(
                    "duplicate case id `{}`",
                    trace.case_id
                )));
            }
            if trace.is_empty() {
                return Err(LogError::InvalidSchema(format!(
                    "case `{}` has no events",
                    trace.case_id
                )));
            }
            let mut last_ts: Option<DateTime<Utc>> = None;
            for event in &trace.events {
                if event.cells.len() != self.schema.n_attributes() {
                    return Err(LogError::InvalidSchema(format!(
                        "case `{}`: event has {} cells, schema has {} attributes",
                        trace.case_id,
                        event.cells.len(),
                        self.schema.n_attributes()
                    )));
                }
                if let Some(ts) = event.cell(ts_idx).as_timestamp() {
                    if let Some(prev) = last_ts {
                        if ts < prev {
                            return Err(LogError::InvalidSchema(format!(
                                "case `{}`: timestamps are not non-decreasing",
                                trace.case_id
                            )));
                        }
                    }
                    last_ts = Some(ts);
                }
            }
            for (idx, attr) in self.schema.attributes.iter().enumerate() {
                if attr.scope != AttrScope::Trace {
                    continue;
                }
                let mut value: Option<&str> = None;
                for event in &trace.events {
                    if let Some(v) = event.cell(idx).as_str() {
                        match value {
                            None => value = Some(v),
                            Some(seen) if seen != v => {
                                return Err(LogError::InconsistentTraceAttribute {
                                    case: trace.case_id.clone(),
                                    column: attr.name.clone(),
                                })
                            }
                            _ => {}
                        }
                    }
                }
            }
            let _ = AttrKind::Categorical; // kinds validated by schema
        }
        Ok(())
    }
}
