//! CSV ingestion and emission.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::{DateTime, Utc};

use crate::error::LogError;
use crate::event::{Cell, Event, EventLog, Trace};
use crate::schema::{AttrKind, AttrScope, AttributeSchema};

#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Token rendered for (and read back as) missing cells.
    pub missing_token: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { missing_token: "-".into() }
    }
}

impl CsvOptions {
    pub fn with_token(token: impl Into<String>) -> Self {
        Self { missing_token: token.into() }
    }
}

/// Reads a CSV log: rows grouped by case id (first-seen order), events sorted
/// by timestamp ascending, stable on ties and on missing timestamps.
///
/// Empty strings and the missing token become [`Cell::Missing`].
pub fn parse_csv_log(
    source: impl Read,
    schema: &AttributeSchema,
    options: &CsvOptions,
) -> Result<EventLog, LogError> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(source);
    let headers = reader.headers()?.clone();

    let column = |name: &str| -> Result<usize, LogError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LogError::MissingColumn(name.to_string()))
    };
    let case_col = column(&schema.case_id_column)?;
    let attr_cols: Vec<usize> = schema
        .attributes
        .iter()
        .map(|a| column(&a.name))
        .collect::<Result<_, _>>()?;
    let ts_attr = schema.timestamp_index();

    struct Row {
        event: Event,
        sort_key: Option<DateTime<Utc>>,
        file_order: usize,
    }

    let mut case_order: Vec<String> = Vec::new();
    let mut rows_by_case: HashMap<String, Vec<Row>> = HashMap::new();

    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_number = row_idx + 2; // 1-based, counting the header line
        let case_id = record.get(case_col).unwrap_or("").to_string();

        let mut cells = Vec::with_capacity(schema.n_attributes());
        for (attr_idx, &col) in attr_cols.iter().enumerate() {
            let raw = record.get(col).unwrap_or("");
            if raw.is_empty() || raw == options.missing_token {
                cells.push(Cell::Missing);
                continue;
            }
            let attr = &schema.attributes[attr_idx];
            match attr.kind {
                AttrKind::Timestamp => {
                    if crate::event::parse_timestamp(raw).is_none() {
                        return Err(LogError::UnparsableTimestamp {
                            row: row_number,
                            value: raw.to_string(),
                        });
                    }
                }
                AttrKind::Numeric => {
                    if raw.parse::<f64>().is_err() {
                        return Err(LogError::UnparsableNumber {
                            row: row_number,
                            column: attr.name.clone(),
                            value: raw.to_string(),
                        });
                    }
                }
                AttrKind::Categorical => {}
            }
            cells.push(Cell::Present(raw.to_string()));
        }

        let event = Event { cells };
        let rows = match rows_by_case.get_mut(&case_id) {
            Some(rows) => rows,
            None => {
                case_order.push(case_id.clone());
                rows_by_case.entry(case_id.clone()).or_default()
            }
        };
        // Rows without a timestamp inherit the previous row's key so a stable
        // sort keeps them in file position.
        let own_ts = event.cell(ts_attr).as_timestamp();
        let sort_key = own_ts.or_else(|| rows.last().and_then(|r| r.sort_key));
        rows.push(Row { event, sort_key, file_order: row_idx });
    }

    if case_order.is_empty() {
        return Err(LogError::EmptyLog);
    }

    let mut traces = Vec::with_capacity(case_order.len());
    for case_id in case_order {
        let mut rows = rows_by_case.remove(&case_id).expect("case recorded");
        rows.sort_by(|a, b| match (a.sort_key, b.sort_key) {
            (Some(x), Some(y)) => x.cmp(&y).then(a.file_order.cmp(&b.file_order)),
            (None, None) => a.file_order.cmp(&b.file_order),
            (None, Some(_)) => std::cmp::Ordering::Less,
            (Some(_), None) => std::cmp::Ordering::Greater,
        });
        let events = rows.into_iter().map(|r| r.event).collect();
        traces.push(Trace { case_id, events });
    }

    // Trace-scoped attributes must be constant within each case.
    for trace in &traces {
        for (idx, attr) in schema.attributes.iter().enumerate() {
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
    }

    Ok(EventLog { schema: schema.clone(), traces })
}

/// Writes a log as CSV: case id column first, then attributes in schema
/// order. Missing cells render as the missing token.
pub fn write_csv_log(
    log: &EventLog,
    sink: impl Write,
    options: &CsvOptions,
) -> Result<(), LogError> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = Vec::with_capacity(1 + log.schema.n_attributes());
    header.push(log.schema.case_id_column.as_str());
    for attr in &log.schema.attributes {
        header.push(attr.name.as_str());
    }
    writer.write_record(&header)?;

    for trace in &log.traces {
        for event in &trace.events {
            let mut record = Vec::with_capacity(header.len());
            record.push(trace.case_id.as_str());
            for cell in &event.cells {
                record.push(cell.as_str().unwrap_or(&options.missing_token));
            }
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Attribute;

    fn schema() -> AttributeSchema {
        AttributeSchema::new(
            vec![
                Attribute { name: "activity".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
                Attribute { name: "timestamp".into(), kind: AttrKind::Timestamp, scope: AttrScope::Event },
            ],
            "case_id",
            "activity",
            "timestamp",
        )
        .unwrap()
    }

    #[test]
    fn empty_body_is_an_error() {
        let csv = "case_id,activity,timestamp\n";
        let err = parse_csv_log(csv.as_bytes(), &schema(), &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, LogError::EmptyLog));
    }

    #[test]
    fn missing_header_column_is_reported() {
        let csv = "case_id,activity\n1,A\n";
        let err = parse_csv_log(csv.as_bytes(), &schema(), &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, LogError::MissingColumn(c) if c == "timestamp"));
    }

    #[test]
    fn bad_timestamp_is_reported_with_row() {
        let csv = "case_id,activity,timestamp\n1,A,yesterday\n";
        let err = parse_csv_log(csv.as_bytes(), &schema(), &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, LogError::UnparsableTimestamp { row: 2, .. }));
    }

    #[test]
    fn rows_are_sorted_by_timestamp_within_case() {
        let csv = "case_id,activity,timestamp\n\
                   1,B,2024-01-01 00:00:02\n\
                   1,A,2024-01-01 00:00:01\n";
        let log = parse_csv_log(csv.as_bytes(), &schema(), &CsvOptions::default()).unwrap();
        let acts: Vec<_> = log.traces[0]
            .events
            .iter()
            .map(|e| e.cell(0).as_str().unwrap().to_string())
            .collect();
        assert_eq!(acts, ["A", "B"]);
    }

    #[test]
    fn missing_token_and_empty_string_become_missing() {
        let csv = "case_id,activity,timestamp\n1,-,2024-01-01 00:00:01\n1,,2024-01-01 00:00:02\n";
        let log = parse_csv_log(csv.as_bytes(), &schema(), &CsvOptions::default()).unwrap();
        assert!(log.traces[0].events[0].cell(0).is_missing());
        assert!(log.traces[0].events[1].cell(0).is_missing());
    }
}
