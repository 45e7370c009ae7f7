//! Builds an annotated relational schema and a knowledge base from a class
//! graph and JSON-LD instance data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::annotate::{auto_annotate, merge_annotations, split_camel};
use super::cardinality::infer_cardinality;
use super::classify::{
    classify_entities, coerce, elements, resolve_range, strip_context, type_of, RangeKind, DEFAULT_ENTITY_ROOTS,
};
use super::vocab::{SchemaGraph, DATA_TYPES};
use crate::error::SchemaError;
use crate::kb::{KnowledgeBase, Row};
use crate::schema::{pluralize, AnnotationSet, FieldDef, NlSchema, Pos, TableDef};
use crate::syntax::is_field_name;
use crate::types::TypeTag;
use crate::value::{normalize_string, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildConfig {
    #[serde(default = "default_roots")]
    pub entity_roots: Vec<String>,
    /// Classes forced to be entities.
    #[serde(default)]
    pub entities: Vec<String>,
    /// Classes forced to be non-entities.
    #[serde(default = "default_non_entities")]
    pub non_entities: Vec<String>,
    /// Extra words stripped from the ends of field names when annotating.
    #[serde(default)]
    pub stop_words: Vec<String>,
}

fn default_roots() -> Vec<String> {
    DEFAULT_ENTITY_ROOTS.iter().map(|s| s.to_string()).collect()
}

fn default_non_entities() -> Vec<String> {
    vec!["Review".to_string()]
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            entity_roots: default_roots(),
            entities: Vec::new(),
            non_entities: default_non_entities(),
            stop_words: Vec::new(),
        }
    }
}

/// Manual annotations in the schema file's shape; types may be omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationOverlay {
    #[serde(default)]
    pub tables: BTreeMap<String, OverlayTable>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OverlayTable {
    #[serde(default)]
    pub annotations: AnnotationSet,
    #[serde(default)]
    pub fields: BTreeMap<String, OverlayField>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OverlayField {
    #[serde(default)]
    pub annotations: AnnotationSet,
}

impl AnnotationOverlay {
    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| SchemaError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub schema: NlSchema,
    pub kb: KnowledgeBase,
    pub warnings: Vec<String>,
}

/// Reads every `.json` / `.jsonld` file of a directory, in name order.
pub fn load_documents(dir: &Path) -> Result<Vec<Json>, SchemaError> {
    let io = |source| SchemaError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json" || e == "jsonld"))
        .collect();
    paths.sort();
    let mut docs = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|source| SchemaError::Io {
            path: p.clone(),
            source,
        })?;
        docs.push(serde_json::from_str(&text).map_err(|source| SchemaError::Json {
            path: p.clone(),
            source,
        })?);
    }
    Ok(docs)
}

#[derive(Debug, Clone)]
struct Resolution {
    kind: RangeKind,
    is_array: bool,
}

struct Builder<'g> {
    graph: &'g SchemaGraph,
    entities: BTreeSet<String>,
    /// class -> property -> observed cells
    observed: BTreeMap<String, BTreeMap<String, Vec<Json>>>,
    resolved: BTreeMap<String, BTreeMap<String, Resolution>>,
    promoted: BTreeSet<String>,
    warnings: BTreeSet<String>,
}

pub fn build(
    graph: &SchemaGraph,
    docs: &[Json],
    config: &BuildConfig,
    overlay: Option<&AnnotationOverlay>,
) -> Result<BuildOutput, SchemaError> {
    let entities = classify_entities(graph, &config.entity_roots, &config.entities, &config.non_entities)?;
    let mut b = Builder {
        graph,
        entities,
        observed: BTreeMap::new(),
        resolved: BTreeMap::new(),
        promoted: BTreeSet::new(),
        warnings: BTreeSet::new(),
    };
    let tops = top_level(docs);
    let mut top_tables = Vec::new();
    for obj in &tops {
        match type_of(obj) {
            Some(t) if b.entities.contains(&t) => {
                b.observe(obj, &t);
                if !top_tables.contains(&t) {
                    top_tables.push(t);
                }
            }
            Some(t) if graph.has_class(&t) => {
                b.warn(format!("top-level object of non-entity class {t} skipped"));
            }
            Some(t) => b.warn(format!("unknown class {t} skipped")),
            None => b.warn("top-level object without @type skipped".into()),
        }
    }
    b.resolve();
    b.promote();

    let mut tables: BTreeSet<String> = top_tables.iter().cloned().collect();
    for props in b.resolved.values() {
        for r in props.values() {
            match &r.kind {
                RangeKind::Entity(t) => {
                    tables.insert(t.clone());
                }
                RangeKind::Record(d) if b.promoted.contains(d) => {
                    tables.insert(d.clone());
                }
                _ => {}
            }
        }
    }

    let mut schema = NlSchema::new();
    for t in &tables {
        let mut fields = BTreeMap::new();
        b.flatten(t, "", &mut vec![t.clone()], &mut fields);
        let mut owners: Vec<&str> = vec![t.as_str()];
        owners.extend(config.stop_words.iter().map(String::as_str));
        let manual = overlay.and_then(|o| o.tables.get(t));
        for (name, f) in fields.iter_mut() {
            let auto = auto_annotate(name, &f.ty, &owners);
            f.annotations = match manual.and_then(|m| m.fields.get(name)) {
                Some(m) => merge_annotations(&auto, &m.annotations),
                None => auto,
            };
        }
        if let Some(m) = manual {
            for fname in m.fields.keys() {
                if !fields.contains_key(fname) {
                    b.warn(format!("annotation overlay names unknown field {t}.{fname}"));
                }
            }
        }
        let auto = AnnotationSet::new().with(Pos::Base, &pluralize(&split_camel(t).join(" ")));
        let annotations = match manual {
            Some(m) => merge_annotations(&auto, &m.annotations),
            None => auto,
        };
        schema.tables.insert(
            t.clone(),
            TableDef {
                extends: graph.ancestors(t),
                annotations,
                fields,
            },
        );
    }
    if let Some(o) = overlay {
        for t in o.tables.keys() {
            if !schema.has_table(t) {
                b.warn(format!("annotation overlay names unknown table {t}"));
            }
        }
    }
    schema.validate()?;

    let mut rows = RowBuilder {
        schema: &schema,
        kb: KnowledgeBase::new(),
        warnings: Vec::new(),
    };
    for t in schema.tables.keys() {
        rows.kb.ensure_table(t);
    }
    for obj in &tops {
        if let Some(t) = type_of(obj).filter(|t| schema.has_table(t)) {
            rows.row(obj, &t, false);
        }
    }
    let RowBuilder { kb, warnings, .. } = rows;
    b.warnings.extend(warnings);
    Ok(BuildOutput {
        schema,
        kb,
        warnings: b.warnings.into_iter().collect(),
    })
}

fn top_level(docs: &[Json]) -> Vec<&Json> {
    fn walk<'a>(j: &'a Json, out: &mut Vec<&'a Json>) {
        match j {
            Json::Array(items) => items.iter().for_each(|i| walk(i, out)),
            Json::Object(o) => match o.get("@graph") {
                Some(g) => walk(g, out),
                None => out.push(j),
            },
            _ => {}
        }
    }
    let mut out = Vec::new();
    docs.iter().for_each(|d| walk(d, &mut out));
    out
}

impl Builder<'_> {
    fn warn(&mut self, w: String) {
        self.warnings.insert(w);
    }

    /// Class of a nested object: its own `@type`, else the first class-valued
    /// range of the property. Data-type objects (coordinates, amounts) have none.
    fn nested_class(&self, obj: &Json, prop: &str) -> Option<String> {
        if let Some(t) = type_of(obj) {
            return (self.graph.has_class(&t) && !DATA_TYPES.contains(&t.as_str())).then_some(t);
        }
        self.graph
            .properties
            .get(prop)?
            .ranges
            .iter()
            .find_map(|r| (self.graph.has_class(r) && !DATA_TYPES.contains(&r.as_str())).then(|| r.clone()))
    }

    fn observe(&mut self, obj: &Json, class: &str) {
        let Some(map) = obj.as_object() else { return };
        for (k, v) in map {
            if k.starts_with('@') {
                continue;
            }
            if !self.graph.properties.contains_key(k) {
                self.warn(format!("property {k} on {class} is not in the vocabulary; dropped"));
                continue;
            }
            if !self.graph.applies_to(k, class) {
                self.warn(format!("property {k} is not declared for {class}"));
            }
            self.observed
                .entry(class.to_string())
                .or_default()
                .entry(k.clone())
                .or_default()
                .push(v.clone());
            for e in elements(v) {
                if e.is_object() {
                    if let Some(c) = self.nested_class(e, k) {
                        self.observe(e, &c);
                    }
                }
            }
        }
    }

    fn resolve(&mut self) {
        let mut resolved = BTreeMap::new();
        for (class, props) in &self.observed {
            for (prop, cells) in props {
                let def = &self.graph.properties[prop];
                let refs: Vec<&Json> = cells.iter().collect();
                let mut ranges = def.ranges.clone();
                if !ranges.iter().any(|r| r == "Text") {
                    ranges.push("Text".into());
                }
                let kind = match resolve_range(self.graph, &self.entities, &ranges, &refs) {
                    RangeKind::Record(d) => RangeKind::Record(self.most_observed(&d, &refs)),
                    RangeKind::Entity(d) => RangeKind::Entity(self.most_observed(&d, &refs)),
                    other => other,
                };
                let is_array = infer_cardinality(prop, &def.ranges, &def.comment, &refs);
                resolved
                    .entry(class.clone())
                    .or_insert_with(BTreeMap::new)
                    .insert(prop.clone(), Resolution { kind, is_array });
            }
        }
        self.resolved = resolved;
    }

    /// The most frequent observed `@type` among cells that descends from
    /// `class`; ties keep the earliest seen.
    fn most_observed(&self, class: &str, cells: &[&Json]) -> String {
        let mut counts: Vec<(String, usize)> = Vec::new();
        for e in cells.iter().flat_map(|c| elements(c)) {
            if let Some(t) = type_of(e).filter(|t| self.graph.is_a(t, class)) {
                match counts.iter_mut().find(|(n, _)| *n == t) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((t, 1)),
                }
            }
        }
        let mut best: Option<(String, usize)> = None;
        for (t, c) in counts {
            if best.as_ref().is_none_or(|(_, bc)| c > *bc) {
                best = Some((t, c));
            }
        }
        best.map(|(t, _)| t).unwrap_or_else(|| class.to_string())
    }

    /// Non-entity classes that are held in lists or contain themselves
    /// become tables.
    fn promote(&mut self) {
        let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (class, props) in &self.resolved {
            for r in props.values() {
                if let RangeKind::Record(d) = &r.kind {
                    edges.entry(class.as_str()).or_default().insert(d.as_str());
                    if r.is_array {
                        self.promoted.insert(d.clone());
                    }
                }
            }
        }
        let records: BTreeSet<&str> = edges.values().flatten().copied().collect();
        for d in records {
            let mut stack = vec![d];
            let mut seen = BTreeSet::new();
            let mut cyclic = false;
            while let Some(c) = stack.pop() {
                for &n in edges.get(c).into_iter().flatten() {
                    if n == d {
                        cyclic = true;
                    }
                    if seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
            if cyclic {
                self.promoted.insert(d.to_string());
            }
        }
    }

    fn flatten(&mut self, class: &str, prefix: &str, stack: &mut Vec<String>, out: &mut BTreeMap<String, FieldDef>) {
        let Some(props) = self.resolved.get(class).cloned() else {
            return;
        };
        for (prop, r) in props {
            let name = format!("{prefix}{prop}");
            if !is_field_name(&name) || name == "id" {
                self.warn(format!("field name {name} on {} is reserved; dropped", stack[0]));
                continue;
            }
            let ty = match &r.kind {
                RangeKind::Record(d) if self.promoted.contains(d) => TypeTag::EntityRef(d.clone()),
                RangeKind::Record(d) => {
                    if stack.contains(d) {
                        self.warn(format!("recursive record {d} under {name} dropped"));
                        continue;
                    }
                    stack.push(d.clone());
                    self.flatten(d, &format!("{name}."), stack, out);
                    stack.pop();
                    continue;
                }
                RangeKind::Entity(t) => TypeTag::EntityRef(t.clone()),
                RangeKind::Primitive(t) => t.clone(),
                RangeKind::Text => TypeTag::String,
            };
            let mut f = FieldDef::new(ty, r.is_array);
            f.source_property = prop.clone();
            out.insert(name, f);
        }
    }
}

struct RowBuilder<'s> {
    schema: &'s NlSchema,
    kb: KnowledgeBase,
    warnings: Vec<String>,
}

fn path<'j>(obj: &'j Json, dotted: &str) -> Option<&'j Json> {
    let mut cur = obj;
    for part in dotted.split('.') {
        cur = match cur {
            Json::Array(items) => items.first()?.get(part)?,
            other => other.get(part)?,
        };
    }
    Some(cur)
}

impl RowBuilder<'_> {
    /// Inserts a row for `obj` into `table` and returns its id. Nested
    /// objects without `@id` are merged with an existing row of the same name.
    fn row(&mut self, obj: &Json, table: &str, nested: bool) -> String {
        let explicit = obj.get("@id").and_then(Json::as_str).map(str::to_string);
        if let Some(id) = &explicit {
            if self.kb.rows(table).iter().any(|r| &r.id == id) {
                return id.clone();
            }
        }
        let name = obj.get("name").and_then(Json::as_str).map(normalize_string);
        if explicit.is_none() && nested {
            if let Some(n) = &name {
                if let Some(id) = self.kb.find_by_name(table, n).first() {
                    return id.to_string();
                }
            }
        }
        let def = self.schema.table(table).expect("row for a schema table");
        let mut row = Row::new(String::new());
        for (fname, f) in &def.fields {
            let Some(cell) = path(obj, fname).filter(|c| !c.is_null()) else {
                continue;
            };
            let items: Vec<&Json> = if f.is_array {
                elements(cell)
            } else {
                match cell {
                    Json::Array(items) => {
                        if items.len() > 1 {
                            self.warnings.push(format!(
                                "{table}.{fname}: list given for a single-valued field; first kept"
                            ));
                        }
                        items.iter().take(1).collect()
                    }
                    other => vec![other],
                }
            };
            let mut values = Vec::new();
            for item in items {
                match self.cell(item, &f.ty) {
                    Some(v) => values.push(v),
                    None => self
                        .warnings
                        .push(format!("{table}.{fname}: cannot read {item} as {}; set to null", f.ty)),
                }
            }
            let value = if f.is_array {
                Some(Value::Array(values))
            } else {
                values.pop()
            };
            if let Some(v) = value {
                row.cells.insert(fname.clone(), v);
            }
        }
        let id = explicit.unwrap_or_else(|| {
            let base = table.to_lowercase();
            let mut n = self.kb.rows(table).len() + 1;
            while self.kb.rows(table).iter().any(|r| r.id == format!("{base}-{n}")) {
                n += 1;
            }
            format!("{base}-{n}")
        });
        row.id = id.clone();
        self.kb.insert(table, row);
        id
    }

    fn cell(&mut self, item: &Json, ty: &TypeTag) -> Option<Value> {
        match ty {
            TypeTag::EntityRef(target) => {
                let id = match item {
                    Json::Object(_) => self.row(item, target, true),
                    Json::String(s) if s.contains("://") || s.starts_with("_:") => s.clone(),
                    Json::String(s) => {
                        let obj = serde_json::json!({ "name": s });
                        self.row(&obj, target, true)
                    }
                    _ => return None,
                };
                Some(Value::Entity {
                    table: target.clone(),
                    id,
                })
            }
            TypeTag::Enum(_) | TypeTag::Boolean => coerce(item, ty),
            TypeTag::String => match item {
                Json::String(s) => Some(Value::string(strip_iri(s))),
                other => coerce(other, ty),
            },
            other => coerce(item, other),
        }
    }
}

/// Enumeration IRIs ("http://schema.org/InStock") read as their last segment.
fn strip_iri(s: &str) -> &str {
    if s.starts_with("http://schema.org/") || s.starts_with("https://schema.org/") {
        strip_context(s)
    } else {
        s
    }
}
