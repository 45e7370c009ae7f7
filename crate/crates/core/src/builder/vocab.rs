//! Schema.org-style class and property graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SchemaError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDef {
    #[serde(default)]
    pub superclasses: Vec<String>,
    #[serde(default)]
    pub comment: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDef {
    #[serde(default)]
    pub domains: Vec<String>,
    #[serde(default)]
    pub ranges: Vec<String>,
    #[serde(default)]
    pub comment: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaGraph {
    #[serde(default)]
    pub classes: BTreeMap<String, ClassDef>,
    #[serde(default)]
    pub properties: BTreeMap<String, PropertyDef>,
}

/// Range names treated as scalar data types rather than classes.
pub const DATA_TYPES: &[&str] = &[
    "Text",
    "URL",
    "Number",
    "Integer",
    "Float",
    "Boolean",
    "Date",
    "DateTime",
    "Time",
    "Duration",
    "Distance",
    "Mass",
    "GeoCoordinates",
    "MonetaryAmount",
    "ItemList",
    "QuantitativeValue",
];

impl SchemaGraph {
    pub fn load(path: &Path) -> Result<SchemaGraph, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let graph: SchemaGraph = serde_json::from_str(&text).map_err(|source| SchemaError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        graph.validate()?;
        Ok(graph)
    }

    /// Every class must reach `Thing` through its superclasses.
    pub fn validate(&self) -> Result<(), SchemaError> {
        for name in self.classes.keys() {
            if name != "Thing" && !self.ancestors(name).iter().any(|a| a == "Thing") {
                return Err(SchemaError::Invalid(format!(
                    "class {name} does not descend from Thing"
                )));
            }
        }
        Ok(())
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    /// Ancestors in breadth-first order, nearest first, without duplicates.
    pub fn ancestors(&self, class: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        if let Some(c) = self.classes.get(class) {
            queue.extend(c.superclasses.iter().map(String::as_str));
        }
        while let Some(c) = queue.pop_front() {
            if c == class || !seen.insert(c.to_string()) {
                continue;
            }
            out.push(c.to_string());
            if let Some(def) = self.classes.get(c) {
                queue.extend(def.superclasses.iter().map(String::as_str));
            }
        }
        out
    }

    pub fn is_a(&self, class: &str, ancestor: &str) -> bool {
        class == ancestor || self.ancestors(class).iter().any(|a| a == ancestor)
    }

    /// Whether `property` applies to `class` (declared on it or an ancestor).
    pub fn applies_to(&self, property: &str, class: &str) -> bool {
        self.properties
            .get(property)
            .is_some_and(|p| p.domains.iter().any(|d| self.is_a(class, d)))
    }
}
