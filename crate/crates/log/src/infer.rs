//! Schema inference from a CSV sample.

use std::collections::{HashMap, HashSet};
use std::io::Read;

use crate::error::LogError;
use crate::event::parse_timestamp;
use crate::schema::{AttrKind, AttrScope, Attribute, AttributeSchema};

/// Names of the three distinguished columns.
#[derive(Debug, Clone)]
pub struct SchemaHints {
    pub case_id_column: String,
    pub activity_column: String,
    pub timestamp_column: String,
    /// Missing-cell token to ignore while inferring.
    pub missing_token: String,
}

impl Default for SchemaHints {
    fn default() -> Self {
        Self {
            case_id_column: "case_id".into(),
            activity_column: "activity".into(),
            timestamp_column: "timestamp".into(),
            missing_token: "-".into(),
        }
    }
}

/// Infers kinds and scopes for every non-case-id column.
///
/// A column is a timestamp if every non-missing value parses as one, numeric
/// if every value parses as a number, categorical otherwise. Integer columns
/// that vary per event and have low distinct-value ratio are treated as
/// categorical codes (resource ids and the like). Scope is `trace` when the
/// value is constant within every case.
pub fn infer_schema(source: impl Read, hints: &SchemaHints) -> Result<AttributeSchema, LogError> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    let names: Vec<String> = headers.iter().map(str::to_string).collect();

    for required in [&hints.case_id_column, &hints.activity_column, &hints.timestamp_column] {
        if !names.iter().any(|n| n == required) {
            return Err(LogError::MissingColumn(required.clone()));
        }
    }
    let case_col = names.iter().position(|n| *n == hints.case_id_column).unwrap();

    struct Profile {
        all_numeric: bool,
        all_integer: bool,
        all_timestamp: bool,
        distinct: HashSet<String>,
        non_missing: usize,
        per_case_value: HashMap<String, String>,
        constant_per_case: bool,
    }
    let mut profiles: Vec<Profile> = names
        .iter()
        .map(|_| Profile {
            all_numeric: true,
            all_integer: true,
            all_timestamp: true,
            distinct: HashSet::new(),
            non_missing: 0,
            per_case_value: HashMap::new(),
            constant_per_case: true,
        })
        .collect();

    let mut saw_rows = false;
    for record in reader.records() {
        let record = record?;
        saw_rows = true;
        let case_id = record.get(case_col).unwrap_or("").to_string();
        for (col, value) in record.iter().enumerate() {
            if col == case_col {
                continue;
            }
            let profile = &mut profiles[col];
            if value.is_empty() || value == hints.missing_token {
                continue;
            }
            profile.non_missing += 1;
            profile.distinct.insert(value.to_string());
            if value.parse::<f64>().is_err() {
                profile.all_numeric = false;
                profile.all_integer = false;
            } else if value.parse::<i64>().is_err() {
                profile.all_integer = false;
            }
            if parse_timestamp(value).is_none() {
                profile.all_timestamp = false;
            }
            match profile.per_case_value.get(&case_id) {
                None => {
                    profile.per_case_value.insert(case_id.clone(), value.to_string());
                }
                Some(seen) if seen != value => profile.constant_per_case = false,
                _ => {}
            }
        }
    }
    if !saw_rows {
        return Err(LogError::EmptyLog);
    }

    let mut attributes = Vec::new();
    for (col, name) in names.iter().enumerate() {
        if col == case_col {
            continue;
        }
        let profile = &profiles[col];
        let scope = if *name == hints.activity_column || *name == hints.timestamp_column {
            AttrScope::Event
        } else if profile.constant_per_case {
            AttrScope::Trace
        } else {
            AttrScope::Event
        };

        let kind = if *name == hints.activity_column {
            AttrKind::Categorical
        } else if *name == hints.timestamp_column {
            AttrKind::Timestamp
        } else if profile.non_missing == 0 {
            AttrKind::Categorical
        } else if profile.all_timestamp {
            AttrKind::Timestamp
        } else if profile.all_numeric {
            // Low-cardinality integer codes varying per event are ids, not
            // measurements.
            let ratio = profile.distinct.len() as f64 / profile.non_missing as f64;
            let id_like = profile.all_integer && scope == AttrScope::Event && ratio <= 0.5;
            if id_like {
                AttrKind::Categorical
            } else {
                AttrKind::Numeric
            }
        } else {
            AttrKind::Categorical
        };

        attributes.push(Attribute { name: name.clone(), kind, scope });
    }

    AttributeSchema::new(
        attributes,
        hints.case_id_column.clone(),
        hints.activity_column.clone(),
        hints.timestamp_column.clone(),
    )
}
