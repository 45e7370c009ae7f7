//! Entity classification, range resolution and cell coercion.

use std::collections::BTreeSet;

use serde_json::Value as Json;

use super::vocab::SchemaGraph;
use crate::error::SchemaError;
use crate::types::{Dimension, TypeTag};
use crate::value::{parse_date, parse_time, units, Location, Value};

pub const DEFAULT_ENTITY_ROOTS: &[&str] = &["Person", "Organization", "Place", "Event", "CreativeWork"];

/// Entity classes: descendants of any root, adjusted by overrides. Overrides
/// apply to the named class only.
pub fn classify_entities(
    graph: &SchemaGraph,
    roots: &[String],
    make_entity: &[String],
    make_non_entity: &[String],
) -> Result<BTreeSet<String>, SchemaError> {
    for c in make_entity.iter().chain(make_non_entity) {
        if !graph.has_class(c) {
            return Err(SchemaError::UnknownClass(c.clone()));
        }
    }
    let mut out: BTreeSet<String> = graph
        .classes
        .keys()
        .filter(|c| roots.iter().any(|r| graph.is_a(c, r)))
        .cloned()
        .collect();
    out.extend(make_entity.iter().cloned());
    for c in make_non_entity {
        out.remove(c);
    }
    Ok(out)
}

/// What a property range resolves to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RangeKind {
    /// Non-entity class, flattened into the owner (or promoted to a table).
    Record(String),
    Primitive(TypeTag),
    Entity(String),
    Text,
}

impl RangeKind {
    fn priority(&self) -> u8 {
        match self {
            RangeKind::Record(_) => 0,
            RangeKind::Primitive(_) => 1,
            RangeKind::Entity(_) => 2,
            RangeKind::Text => 3,
        }
    }
}

/// Scalar type of a data-type range name.
pub fn data_type(name: &str) -> Option<TypeTag> {
    Some(match name {
        "Number" | "Integer" | "Float" | "QuantitativeValue" => TypeTag::Number,
        "Boolean" => TypeTag::Boolean,
        "Date" | "DateTime" => TypeTag::Date,
        "Time" => TypeTag::Time,
        "Duration" => TypeTag::Measure(Dimension::Duration),
        "Distance" => TypeTag::Measure(Dimension::Distance),
        "Mass" => TypeTag::Measure(Dimension::Weight),
        "GeoCoordinates" => TypeTag::Location,
        "MonetaryAmount" => TypeTag::Measure(Dimension::Currency),
        _ => return None,
    })
}

/// Kind of a single range member. Classes that are ancestors of an entity
/// root (such as Thing) are too abstract to flatten and become text.
pub fn range_kind(graph: &SchemaGraph, entities: &BTreeSet<String>, range: &str) -> RangeKind {
    if matches!(range, "Text" | "URL" | "ItemList") {
        return RangeKind::Text;
    }
    if let Some(t) = data_type(range) {
        return RangeKind::Primitive(t);
    }
    if entities.contains(range) {
        return RangeKind::Entity(range.to_string());
    }
    if !graph.has_class(range) {
        return RangeKind::Text;
    }
    let abstract_class = entities.iter().any(|e| graph.ancestors(e).iter().any(|a| a == range));
    if abstract_class {
        RangeKind::Text
    } else {
        RangeKind::Record(range.to_string())
    }
}

/// Picks one range member by priority record > primitive > entity > text.
/// Ties among classes go to the one most observed as `@type` (then the
/// listed order); ties among primitives to the one the most cells coerce to.
pub fn resolve_range(
    graph: &SchemaGraph,
    entities: &BTreeSet<String>,
    ranges: &[String],
    observed: &[&Json],
) -> RangeKind {
    let kinds: Vec<RangeKind> = ranges.iter().map(|r| range_kind(graph, entities, r)).collect();
    let Some(best) = kinds.iter().map(RangeKind::priority).min() else {
        return RangeKind::Text;
    };
    let candidates: Vec<&RangeKind> = kinds.iter().filter(|k| k.priority() == best).collect();
    if candidates.len() == 1 {
        return candidates[0].clone();
    }
    let score = |k: &RangeKind| -> usize {
        match k {
            RangeKind::Record(c) | RangeKind::Entity(c) => observed
                .iter()
                .flat_map(|j| elements(j))
                .filter(|j| type_of(j).is_some_and(|t| graph.is_a(&t, c)))
                .count(),
            RangeKind::Primitive(t) => observed
                .iter()
                .flat_map(|j| elements(j))
                .filter(|j| coerce(j, t).is_some())
                .count(),
            RangeKind::Text => 0,
        }
    };
    let mut best_kind = candidates[0];
    let mut best_score = score(best_kind);
    for k in &candidates[1..] {
        let s = score(k);
        if s > best_score {
            best_kind = k;
            best_score = s;
        }
    }
    best_kind.clone()
}

/// The cell itself, or its items if it is an array.
pub fn elements(j: &Json) -> Vec<&Json> {
    match j {
        Json::Array(items) => items.iter().collect(),
        other => vec![other],
    }
}

/// First `@type` of a JSON-LD object.
pub fn type_of(j: &Json) -> Option<String> {
    match j.get("@type")? {
        Json::String(s) => Some(strip_context(s).to_string()),
        Json::Array(a) => a.first()?.as_str().map(|s| strip_context(s).to_string()),
        _ => None,
    }
}

pub fn strip_context(s: &str) -> &str {
    s.rsplit(['/', ':']).next().unwrap_or(s)
}

fn number(j: &Json) -> Option<f64> {
    match j {
        Json::Number(n) => n.as_f64(),
        Json::String(s) => s.trim().replace(',', "").parse().ok(),
        Json::Object(_) => j.get("value").and_then(number),
        _ => None,
    }
    .filter(|x: &f64| x.is_finite())
}

/// Lenient conversion of web data to a scalar of type `ty`; `None` when the
/// cell cannot be coerced.
pub fn coerce(j: &Json, ty: &TypeTag) -> Option<Value> {
    match ty {
        TypeTag::Number => number(j).map(Value::Number),
        TypeTag::String => match j {
            Json::String(s) if !s.trim().is_empty() => Some(Value::string(s)),
            Json::Number(n) => Some(Value::string(&n.to_string())),
            Json::Object(_) => j.get("name").and_then(|n| coerce(n, ty)),
            _ => None,
        },
        TypeTag::Boolean => match j {
            Json::Bool(b) => Some(Value::Boolean(*b)),
            Json::String(s) => match strip_context(s).to_lowercase().as_str() {
                "true" | "yes" => Some(Value::Boolean(true)),
                "false" | "no" => Some(Value::Boolean(false)),
                _ => None,
            },
            _ => None,
        },
        TypeTag::Date => j.as_str().and_then(parse_date).map(Value::Date),
        TypeTag::Time => j.as_str().and_then(parse_time).map(Value::Time),
        TypeTag::Location => {
            let lat = j.get("latitude").or_else(|| j.get("lat")).and_then(number)?;
            let lon = j.get("longitude").or_else(|| j.get("lon")).and_then(number)?;
            let loc = Location::new(lat, lon);
            loc.is_valid().then_some(Value::Location(loc))
        }
        TypeTag::Measure(d) => {
            let x = match j {
                Json::Number(n) => n.as_f64(),
                Json::String(s) => units::parse_measure_text(s, *d),
                Json::Object(_) => {
                    if *d == Dimension::Currency {
                        let cur = j.get("currency").and_then(Json::as_str).unwrap_or("USD");
                        if !cur.eq_ignore_ascii_case("usd") {
                            return None;
                        }
                    }
                    number(j)
                }
                _ => None,
            }?;
            x.is_finite().then_some(Value::Measure(x, *d))
        }
        TypeTag::Enum(members) => {
            let s = strip_context(j.as_str()?);
            members.iter().any(|m| m == s).then(|| Value::Enum(s.to_string()))
        }
        _ => None,
    }
}
