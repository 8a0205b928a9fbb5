//! Attribute encoders fitted on training data.
//!
//! Categorical attributes get a vocabulary in first-seen order with a
//! reserved `MISSING VALUE` class at the last index; unseen values encode to
//! that class. Numeric and timestamp attributes are log1p-transformed; for
//! timestamps the underlying value is seconds elapsed since the trace's first
//! event. Missing numeric values encode to the -1 sentinel.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use logmend_log::{AttrKind, AttributeSchema, Cell, EventLog, Trace};

use crate::error::EncodeError;

/// Reserved class appended to every categorical vocabulary.
pub const MISSING_CLASS: &str = "MISSING VALUE";

/// Sentinel feature value for missing numeric cells.
pub const MISSING_NUMERIC: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AttrEncoder {
    Categorical {
        /// Distinct training values in first-seen order, `MISSING VALUE` last.
        vocab: Vec<String>,
    },
    Numeric {
        transform: String,
        /// Range of transformed training values; reporting only.
        min: Option<f64>,
        max: Option<f64>,
    },
}

impl AttrEncoder {
    pub fn width(&self) -> usize {
        match self {
            AttrEncoder::Categorical { vocab } => vocab.len(),
            AttrEncoder::Numeric { .. } => 1,
        }
    }
}

/// Typed cell content with timestamp cells already reduced to their derived
/// elapsed-seconds value.
#[derive(Debug, Clone, Copy)]
pub enum CellView<'a> {
    Categorical(Option<&'a str>),
    Numeric(Option<f64>),
}

/// Per-attribute encoders plus the schema they were fitted under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSet {
    pub schema: AttributeSchema,
    pub encoders: Vec<AttrEncoder>,
}

impl EncoderSet {
    /// Fits vocabularies and numeric transforms on the training split.
    pub fn fit(train: &EventLog) -> Result<Self, EncodeError> {
        let schema = &train.schema;
        let mut encoders = Vec::with_capacity(schema.n_attributes());
        for (idx, attr) in schema.attributes.iter().enumerate() {
            match attr.kind {
                AttrKind::Categorical => {
                    let mut vocab = Vec::new();
                    let mut seen = HashMap::new();
                    for trace in &train.traces {
                        for event in &trace.events {
                            if let Some(value) = event.cell(idx).as_str() {
                                if value != MISSING_CLASS && !seen.contains_key(value) {
                                    seen.insert(value.to_string(), vocab.len());
                                    vocab.push(value.to_string());
                                }
                            }
                        }
                    }
                    vocab.push(MISSING_CLASS.to_string());
                    encoders.push(AttrEncoder::Categorical { vocab });
                }
                AttrKind::Numeric | AttrKind::Timestamp => {
                    let mut min = f64::INFINITY;
                    let mut max = f64::NEG_INFINITY;
                    let mut any = false;
                    for trace in &train.traces {
                        for event_idx in 0..trace.len() {
                            if let Some(raw) = derived_value(trace, schema, idx, event_idx) {
                                let t = transform(raw, &attr.name)?;
                                min = min.min(t);
                                max = max.max(t);
                                any = true;
                            }
                        }
                    }
                    encoders.push(AttrEncoder::Numeric {
                        transform: "log1p".into(),
                        min: any.then_some(min),
                        max: any.then_some(max),
                    });
                }
            }
        }
        Ok(Self { schema: schema.clone(), encoders })
    }

    pub fn n_attributes(&self) -> usize {
        self.encoders.len()
    }

    /// Feature width of attribute `attr`.
    pub fn width(&self, attr: usize) -> usize {
        self.encoders[attr].width()
    }

    pub fn is_categorical(&self, attr: usize) -> bool {
        matches!(self.encoders[attr], AttrEncoder::Categorical { .. })
    }

    pub fn vocab(&self, attr: usize) -> Option<&[String]> {
        match &self.encoders[attr] {
            AttrEncoder::Categorical { vocab } => Some(vocab),
            AttrEncoder::Numeric { .. } => None,
        }
    }

    /// Index of the reserved missing class for a categorical attribute.
    pub fn missing_index(&self, attr: usize) -> Option<usize> {
        self.vocab(attr).map(|v| v.len() - 1)
    }

    /// Vocabulary index a present value maps to; unseen values map to the
    /// missing class.
    pub fn class_index(&self, attr: usize, value: &str) -> Option<usize> {
        self.vocab(attr).map(|vocab| {
            vocab[..vocab.len() - 1]
                .iter()
                .position(|v| v == value)
                .unwrap_or(vocab.len() - 1)
        })
    }

    /// Encodes one cell into its feature row.
    pub fn encode_value(&self, attr: usize, view: CellView<'_>) -> Result<Vec<f64>, EncodeError> {
        match (&self.encoders[attr], view) {
            (AttrEncoder::Categorical { vocab }, CellView::Categorical(value)) => {
                let class = match value {
                    Some(v) => self.class_index(attr, v).expect("categorical encoder"),
                    None => vocab.len() - 1,
                };
                let mut row = vec![0.0; vocab.len()];
                row[class] = 1.0;
                Ok(row)
            }
            (AttrEncoder::Numeric { .. }, CellView::Numeric(value)) => match value {
                Some(raw) => Ok(vec![transform(raw, &self.schema.attributes[attr].name)?]),
                None => Ok(vec![MISSING_NUMERIC]),
            },
            _ => Err(EncodeError::SchemaMismatch(format!(
                "attribute `{}` encoded with the wrong cell view",
                self.schema.attributes[attr].name
            ))),
        }
    }

    /// Inverse of the numeric transform, clamped at zero.
    pub fn decode_numeric(&self, normalized: f64) -> f64 {
        normalized.exp_m1().max(0.0)
    }

    pub fn to_json(&self) -> Result<String, EncodeError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self, EncodeError> {
        let set: EncoderSet = serde_json::from_str(json)?;
        set.schema.validate().map_err(EncodeError::Log)?;
        Ok(set)
    }
}

fn transform(raw: f64, attr: &str) -> Result<f64, EncodeError> {
    if raw < 0.0 {
        return Err(EncodeError::NegativeDerivedValue { attr: attr.to_string(), value: raw });
    }
    Ok(raw.ln_1p())
}

/// Raw numeric representation of a cell before the log transform: the parsed
/// number for numeric attributes, seconds elapsed since the trace's first
/// present timestamp for timestamp attributes. `None` when the cell is
/// missing.
pub fn derived_value(
    trace: &Trace,
    schema: &AttributeSchema,
    attr: usize,
    event_idx: usize,
) -> Option<f64> {
    let cell = trace.events[event_idx].cell(attr);
    match schema.attributes[attr].kind {
        AttrKind::Numeric => cell.as_number(),
        AttrKind::Timestamp => {
            let ts = cell.as_timestamp()?;
            let anchor = trace.anchor_timestamp(schema)?;
            let micros = (ts - anchor).num_microseconds().unwrap_or_else(|| {
                (ts - anchor).num_milliseconds().saturating_mul(1000)
            });
            Some(micros as f64 / 1e6)
        }
        AttrKind::Categorical => None,
    }
}

/// True when a cell counts as missing for graph purposes.
pub fn cell_is_missing(cell: &Cell) -> bool {
    cell.is_missing()
}
