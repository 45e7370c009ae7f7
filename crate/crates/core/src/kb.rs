//! In-memory instance data: one list of rows per table, with a name index for
//! entity lookup.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde_json::{json, Map, Value as Json};

use crate::error::{KbError, RowError, RuntimeError};
use crate::schema::NlSchema;
use crate::types::TypeTag;
use crate::value::{
    format_date, format_number, format_time, normalize_string, parse_date, parse_time, units, Location, Value,
};

/// A row: its id plus the non-null cells. Missing fields are null.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: String,
    pub cells: BTreeMap<String, Value>,
}

impl Row {
    pub fn new(id: impl Into<String>) -> Self {
        Row {
            id: id.into(),
            cells: BTreeMap::new(),
        }
    }

    pub fn with(mut self, field: &str, value: Value) -> Self {
        self.cells.insert(field.to_string(), value);
        self
    }

    pub fn get(&self, field: &str) -> Option<&Value> {
        self.cells.get(field)
    }

    pub fn name(&self) -> Option<&str> {
        match self.cells.get("name") {
            Some(Value::String(s)) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableData {
    pub rows: Vec<Row>,
    names: HashMap<String, Vec<usize>>,
}

impl TableData {
    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    fn push(&mut self, row: Row) {
        if let Some(name) = row.name() {
            self.names
                .entry(normalize_string(name))
                .or_default()
                .push(self.rows.len());
        }
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    tables: BTreeMap<String, TableData>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row. Panics on a duplicate id, which is a programming error
    /// for programmatically built bases; loaders check ids first.
    pub fn insert(&mut self, table: &str, row: Row) {
        let t = self.tables.entry(table.to_string()).or_default();
        assert!(
            !t.rows.iter().any(|r| r.id == row.id),
            "duplicate id {} in {table}",
            row.id
        );
        t.push(row);
    }

    pub fn ensure_table(&mut self, table: &str) {
        self.tables.entry(table.to_string()).or_default();
    }

    pub fn table(&self, name: &str) -> Option<&TableData> {
        self.tables.get(name)
    }

    pub fn rows(&self, table: &str) -> &[Row] {
        self.tables.get(table).map(|t| t.rows.as_slice()).unwrap_or(&[])
    }

    pub fn table_names(&self) -> impl Iterator<Item = &String> {
        self.tables.keys()
    }

    pub fn len(&self) -> usize {
        self.tables.values().map(|t| t.rows.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ids of rows whose `name` matches case-insensitively.
    pub fn find_by_name(&self, table: &str, name: &str) -> Vec<&str> {
        let Some(t) = self.tables.get(table) else {
            return Vec::new();
        };
        t.names
            .get(&normalize_string(name))
            .map(|idx| idx.iter().map(|&i| t.rows[i].id.as_str()).collect())
            .unwrap_or_default()
    }

    /// The unique id named `name`; ties are an error.
    pub fn resolve_lookup(&self, name: &str, table: &str) -> Result<String, RuntimeError> {
        if !self.tables.contains_key(table) {
            return Err(RuntimeError::UnknownTable(table.to_string()));
        }
        let ids = self.find_by_name(table, name);
        match ids.len() {
            0 => Err(RuntimeError::LookupNotFound {
                name: normalize_string(name),
                table: table.to_string(),
            }),
            1 => Ok(ids[0].to_string()),
            count => Err(RuntimeError::LookupAmbiguous {
                name: normalize_string(name),
                table: table.to_string(),
                count,
            }),
        }
    }

    /// Builds a base from `{table: [row objects]}`, validating every cell
    /// against the schema.
    pub fn from_json(schema: &NlSchema, tables: &Map<String, Json>) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase::new();
        let mut errors = Vec::new();
        for (tname, rows) in tables {
            if !schema.has_table(tname) {
                return Err(KbError::UnknownTable(tname.clone()));
            }
            kb.ensure_table(tname);
            let Some(rows) = rows.as_array() else {
                errors.push(RowError {
                    table: tname.clone(),
                    row: 0,
                    message: "table data must be an array of objects".into(),
                });
                continue;
            };
            for (i, row) in rows.iter().enumerate() {
                match row_from_json(schema, tname, row) {
                    Ok(r) => {
                        if kb.rows(tname).iter().any(|x| x.id == r.id) {
                            errors.push(RowError {
                                table: tname.clone(),
                                row: i,
                                message: format!("duplicate id {}", r.id),
                            });
                        } else {
                            kb.insert(tname, r);
                        }
                    }
                    Err(message) => errors.push(RowError {
                        table: tname.clone(),
                        row: i,
                        message,
                    }),
                }
            }
        }
        if errors.is_empty() {
            Ok(kb)
        } else {
            Err(KbError::Rows(errors))
        }
    }

    /// Loads `<dir>/<Table>.json` for every schema table that has a file.
    pub fn load_dir(schema: &NlSchema, dir: &Path) -> Result<Self, KbError> {
        let mut tables = Map::new();
        for name in schema.tables.keys() {
            let path = dir.join(format!("{name}.json"));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|source| KbError::Io {
                path: path.clone(),
                source,
            })?;
            let json: Json = serde_json::from_str(&text).map_err(|source| KbError::Json {
                path: path.clone(),
                source,
            })?;
            tables.insert(name.clone(), json);
        }
        let mut kb = Self::from_json(schema, &tables)?;
        for name in schema.tables.keys() {
            kb.ensure_table(name);
        }
        Ok(kb)
    }

    pub fn save_dir(&self, schema: &NlSchema, dir: &Path) -> Result<(), KbError> {
        std::fs::create_dir_all(dir).map_err(|source| KbError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, t) in &self.tables {
            let rows: Vec<Json> = t.rows.iter().map(|r| row_to_json(schema, name, r)).collect();
            let path = dir.join(format!("{name}.json"));
            let mut text = serde_json::to_string_pretty(&rows).expect("rows serialize");
            text.push('\n');
            std::fs::write(&path, text).map_err(|source| KbError::Io { path, source })?;
        }
        Ok(())
    }
}

fn row_from_json(schema: &NlSchema, table: &str, row: &Json) -> Result<Row, String> {
    let obj = row.as_object().ok_or("row is not an object")?;
    let id = match obj.get("id") {
        Some(Json::String(s)) if !s.is_empty() => s.clone(),
        Some(Json::Number(n)) => n.to_string(),
        _ => return Err("missing id".into()),
    };
    let def = schema.table(table).ok_or("unknown table")?;
    let mut out = Row::new(id);
    for key in obj.keys() {
        if key != "id" && !def.fields.contains_key(key) && !def.fields.keys().any(|f| f.starts_with(&format!("{key}.")))
        {
            return Err(format!("unknown field {key}"));
        }
    }
    for (fname, fdef) in &def.fields {
        let cell = obj.get(fname).or_else(|| nested(obj, fname));
        let Some(cell) = cell else { continue };
        match cell_from_json(cell, &fdef.field_type()) {
            Ok(Some(v)) => {
                out.cells.insert(fname.clone(), v);
            }
            Ok(None) => {}
            Err(m) => return Err(format!("field {fname}: {m}")),
        }
    }
    Ok(out)
}

fn nested<'a>(obj: &'a Map<String, Json>, dotted: &str) -> Option<&'a Json> {
    let mut parts = dotted.split('.');
    let mut cur = obj.get(parts.next()?)?;
    for p in parts {
        cur = cur.as_object()?.get(p)?;
    }
    Some(cur)
}

/// Converts a JSON cell to a value of type `ty`. `Ok(None)` is a null cell.
pub fn cell_from_json(cell: &Json, ty: &TypeTag) -> Result<Option<Value>, String> {
    if cell.is_null() {
        return Ok(None);
    }
    let bad = || format!("expected {ty}, found {cell}");
    let v = match ty {
        TypeTag::Number => Value::Number(cell.as_f64().ok_or_else(bad)?),
        TypeTag::Measure(d) => match cell {
            Json::Number(n) => Value::Measure(n.as_f64().ok_or_else(bad)?, *d),
            Json::String(s) => Value::Measure(units::parse_measure_text(s, *d).ok_or_else(bad)?, *d),
            _ => return Err(bad()),
        },
        TypeTag::String => Value::string(cell.as_str().ok_or_else(bad)?),
        TypeTag::Boolean => Value::Boolean(cell.as_bool().ok_or_else(bad)?),
        TypeTag::Enum(members) => {
            let s = cell.as_str().ok_or_else(bad)?;
            if !members.is_empty() && !members.iter().any(|m| m == s) {
                return Err(bad());
            }
            Value::Enum(s.to_string())
        }
        TypeTag::Date => Value::Date(parse_date(cell.as_str().ok_or_else(bad)?).ok_or_else(bad)?),
        TypeTag::Time => Value::Time(parse_time(cell.as_str().ok_or_else(bad)?).ok_or_else(bad)?),
        TypeTag::Location => {
            let lat = cell.get("lat").or_else(|| cell.get("latitude")).and_then(Json::as_f64);
            let lon = cell.get("lon").or_else(|| cell.get("longitude")).and_then(Json::as_f64);
            let loc = Location::new(lat.ok_or_else(bad)?, lon.ok_or_else(bad)?);
            if !loc.is_valid() {
                return Err(format!("location out of range: {cell}"));
            }
            Value::Location(loc)
        }
        TypeTag::EntityRef(table) => {
            let id = match cell {
                Json::String(s) => s.clone(),
                Json::Number(n) => n.to_string(),
                _ => return Err(bad()),
            };
            Value::Entity {
                table: table.clone(),
                id,
            }
        }
        TypeTag::Array(elem) => {
            let items = cell.as_array().ok_or_else(bad)?;
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                if let Some(v) = cell_from_json(item, elem)? {
                    out.push(v);
                }
            }
            Value::Array(out)
        }
        TypeTag::Record(_) => return Err("record cells must be flattened".into()),
    };
    Ok(Some(v))
}

pub fn cell_to_json(v: &Value) -> Json {
    match v {
        Value::Number(x) | Value::Measure(x, _) => json!(x),
        Value::String(s) | Value::Enum(s) => json!(s),
        Value::Boolean(b) => json!(b),
        Value::Date(d) => json!(format_date(d)),
        Value::Time(t) => json!(format_time(t)),
        Value::Location(l) => json!({"lat": l.lat, "lon": l.lon}),
        Value::Entity { id, .. } => json!(id),
        Value::Array(items) => Json::Array(items.iter().map(cell_to_json).collect()),
        other => json!(crate::syntax::print_value(other)),
    }
}

fn row_to_json(schema: &NlSchema, table: &str, row: &Row) -> Json {
    let mut obj = Map::new();
    obj.insert("id".into(), json!(row.id));
    let fields = schema.table(table).map(|t| &t.fields);
    for (k, v) in &row.cells {
        if fields.is_none_or(|f| f.contains_key(k)) {
            obj.insert(k.clone(), cell_to_json(v));
        }
    }
    Json::Object(obj)
}

/// Plain-text rendering of a cell for tabular output.
pub fn cell_text(v: &Value) -> String {
    match v {
        Value::Number(x) => format_number(*x),
        Value::Measure(x, d) => format!("{} {}", format_number(*x), units::base_unit(*d)),
        Value::String(s) | Value::Enum(s) => s.clone(),
        Value::Boolean(b) => b.to_string(),
        Value::Date(d) => format_date(d),
        Value::Time(t) => format_time(t),
        Value::Location(l) => format!("{},{}", format_number(l.lat), format_number(l.lon)),
        Value::Entity { id, .. } => id.clone(),
        Value::Array(items) => items.iter().map(cell_text).collect::<Vec<_>>().join("|"),
        other => crate::syntax::print_value(other),
    }
}
