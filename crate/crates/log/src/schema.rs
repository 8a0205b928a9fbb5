//! Column schema for event logs.

use serde::{Deserialize, Serialize};

use crate::error::LogError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Categorical,
    Numeric,
    Timestamp,
}

/// Trace attributes hold one value per case; event attributes vary per event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrScope {
    Event,
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttrKind,
    pub scope: AttrScope,
}

/// Ordered attribute list plus the three distinguished columns.
///
/// The case id column identifies traces and is not itself an attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
    pub case_id_column: String,
    pub activity_column: String,
    pub timestamp_column: String,
}

impl AttributeSchema {
    pub fn new(
        attributes: Vec<Attribute>,
        case_id_column: impl Into<String>,
        activity_column: impl Into<String>,
        timestamp_column: impl Into<String>,
    ) -> Result<Self, LogError> {
        let schema = Self {
            attributes,
            case_id_column: case_id_column.into(),
            activity_column: activity_column.into(),
            timestamp_column: timestamp_column.into(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), LogError> {
        let mut seen = std::collections::HashSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(LogError::InvalidSchema(format!(
                    "duplicate attribute name `{}`",
                    attr.name
                )));
            }
            if attr.name == self.case_id_column {
                return Err(LogError::InvalidSchema(format!(
                    "case id column `{}` cannot also be an attribute",
                    attr.name
                )));
            }
        }
        let activity = self
            .attribute(&self.activity_column)
            .ok_or_else(|| LogError::InvalidSchema("activity column not among attributes".into()))?;
        if activity.kind != AttrKind::Categorical || activity.scope != AttrScope::Event {
            return Err(LogError::InvalidSchema(
                "activity column must be a categorical event attribute".into(),
            ));
        }
        let ts = self
            .attribute(&self.timestamp_column)
            .ok_or_else(|| LogError::InvalidSchema("timestamp column not among attributes".into()))?;
        if ts.kind != AttrKind::Timestamp || ts.scope != AttrScope::Event {
            return Err(LogError::InvalidSchema(
                "timestamp column must be a timestamp event attribute".into(),
            ));
        }
        Ok(())
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn activity_index(&self) -> usize {
        self.attribute_index(&self.activity_column)
            .expect("validated schema has an activity column")
    }

    pub fn timestamp_index(&self) -> usize {
        self.attribute_index(&self.timestamp_column)
            .expect("validated schema has a timestamp column")
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }
}
