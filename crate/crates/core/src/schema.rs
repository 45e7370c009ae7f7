//! Annotated relational schema shared by the type checker, the engine and
//! the synthesizer. Serialized as
//! `{tables: {Name: {fields: {f: {type, is_array, annotations: {pos: [..]}}}}}}`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SchemaError;
use crate::syntax::{is_field_name, is_table_name};
use crate::types::{RowType, TypeTag};

/// Part-of-speech category of an annotation phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pos {
    Base,
    HasANoun,
    IsANoun,
    ActiveVerb,
    PassiveVerb,
    Adjective,
    Preposition,
}

impl Pos {
    pub const ALL: [Pos; 7] = [
        Pos::Base,
        Pos::HasANoun,
        Pos::IsANoun,
        Pos::ActiveVerb,
        Pos::PassiveVerb,
        Pos::Adjective,
        Pos::Preposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pos::Base => "base",
            Pos::HasANoun => "has_a_noun",
            Pos::IsANoun => "is_a_noun",
            Pos::ActiveVerb => "active_verb",
            Pos::PassiveVerb => "passive_verb",
            Pos::Adjective => "adjective",
            Pos::Preposition => "preposition",
        }
    }

    pub fn from_name(s: &str) -> Option<Pos> {
        Pos::ALL.into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Natural-language phrases for a field, by part of speech. `#` marks where
/// the value goes. `reverse` holds phrases for the inverse relation (e.g.
/// "employs #" on a `worksFor` field), where the row entity is the object.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    #[serde(flatten)]
    pub phrases: BTreeMap<Pos, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub reverse: BTreeMap<Pos, Vec<String>>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, pos: Pos, phrase: &str) -> Self {
        self.add(pos, phrase);
        self
    }

    pub fn with_reverse(mut self, pos: Pos, phrase: &str) -> Self {
        let list = self.reverse.entry(pos).or_default();
        if !list.iter().any(|p| p == phrase) {
            list.push(phrase.to_string());
        }
        self
    }

    pub fn add(&mut self, pos: Pos, phrase: &str) {
        let list = self.phrases.entry(pos).or_default();
        if !list.iter().any(|p| p == phrase) {
            list.push(phrase.to_string());
        }
    }

    pub fn get(&self, pos: Pos) -> &[String] {
        self.phrases.get(&pos).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get_reverse(&self, pos: Pos) -> &[String] {
        self.reverse.get(&pos).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn phrase_count(&self) -> usize {
        self.phrases.values().map(Vec::len).sum::<usize>() + self.reverse.values().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.phrase_count() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pos, &String)> {
        self.phrases
            .iter()
            .flat_map(|(pos, list)| list.iter().map(move |p| (*pos, p)))
    }

    /// Lowercase, at most one `#`.
    pub fn check(&self) -> Result<(), String> {
        for list in self.phrases.values().chain(self.reverse.values()) {
            for p in list {
                if p.trim().is_empty() {
                    return Err("empty annotation phrase".into());
                }
                if p.to_lowercase() != *p {
                    return Err(format!("annotation \"{p}\" is not lowercase"));
                }
                if p.matches('#').count() > 1 {
                    return Err(format!("annotation \"{p}\" has more than one '#'"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDef {
    /// Element type when `is_array`.
    #[serde(rename = "type")]
    pub ty: TypeTag,
    #[serde(default)]
    pub is_array: bool,
    #[serde(default)]
    pub annotations: AnnotationSet,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_property: String,
}

impl FieldDef {
    pub fn new(ty: TypeTag, is_array: bool) -> Self {
        Self {
            ty,
            is_array,
            annotations: AnnotationSet::default(),
            source_property: String::new(),
        }
    }

    pub fn annotated(mut self, annotations: AnnotationSet) -> Self {
        self.annotations = annotations;
        self
    }

    /// The field's full type, wrapping the element type in `Array` if needed.
    pub fn field_type(&self) -> TypeTag {
        if self.is_array {
            TypeTag::array(self.ty.clone())
        } else {
            self.ty.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableDef {
    /// Ancestor classes, nearest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extends: Vec<String>,
    /// Noun phrases naming the table's rows ("restaurants").
    #[serde(default, skip_serializing_if = "AnnotationSet::is_empty")]
    pub annotations: AnnotationSet,
    pub fields: BTreeMap<String, FieldDef>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NlSchema {
    pub tables: BTreeMap<String, TableDef>,
}

impl NlSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<NlSchema, SchemaError> {
        let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let schema: NlSchema = serde_json::from_str(&text).map_err(|source| SchemaError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn save(&self, path: &Path) -> Result<(), SchemaError> {
        let text = self.to_json();
        std::fs::write(path, text).map_err(|source| SchemaError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("schema serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<NlSchema, SchemaError> {
        let schema: NlSchema = serde_json::from_str(text).map_err(|source| SchemaError::Json {
            path: "<string>".into(),
            source,
        })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.get(name)
    }

    pub fn field(&self, table: &str, field: &str) -> Option<&FieldDef> {
        self.tables.get(table)?.fields.get(field)
    }

    pub fn has_table(&self, name: &str) -> bool {
        self.tables.contains_key(name)
    }

    /// Row type of a bare table reference: every field plus `id`.
    pub fn row_type(&self, table: &str) -> Option<RowType> {
        let def = self.tables.get(table)?;
        let mut rt = RowType::new();
        for (name, f) in &def.fields {
            rt.insert(name.clone(), f.field_type());
        }
        rt.insert("id", TypeTag::EntityRef(table.to_string()));
        Some(rt)
    }

    /// Whether rows of `table` are people (the table is, or descends from, Person).
    pub fn is_person(&self, table: &str) -> bool {
        table == "Person"
            || self
                .tables
                .get(table)
                .is_some_and(|t| t.extends.iter().any(|c| c == "Person"))
    }

    /// Plural noun phrases for a table; falls back to a pluralized,
    /// space-separated table name.
    pub fn table_phrases(&self, table: &str) -> Vec<String> {
        let from_annotations: Vec<String> = self
            .tables
            .get(table)
            .map(|t| t.annotations.get(Pos::Base).to_vec())
            .unwrap_or_default();
        if from_annotations.is_empty() {
            vec![pluralize(&crate::builder::annotate::split_camel(table).join(" "))]
        } else {
            from_annotations
        }
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        for (tname, table) in &self.tables {
            if !is_table_name(tname) {
                return Err(SchemaError::Invalid(format!("invalid table name {tname}")));
            }
            table
                .annotations
                .check()
                .map_err(|m| SchemaError::Invalid(format!("table {tname}: {m}")))?;
            for (fname, f) in &table.fields {
                let err = |message: String| SchemaError::Field {
                    table: tname.clone(),
                    field: fname.clone(),
                    message,
                };
                if fname == "id" {
                    return Err(err("`id` is implicit and cannot be declared".into()));
                }
                if !is_field_name(fname) {
                    return Err(err("field name is reserved or not an identifier".into()));
                }
                if f.ty.is_array() {
                    return Err(err("element type must not be an array; use is_array".into()));
                }
                if !f.ty.is_well_formed() {
                    return Err(err(format!("malformed type {}", f.ty)));
                }
                if matches!(f.ty, TypeTag::Record(_)) {
                    return Err(err("record fields must be flattened to dotted names".into()));
                }
                if let TypeTag::EntityRef(target) = &f.ty {
                    if !self.tables.contains_key(target) {
                        return Err(err(format!("references unknown table {target}")));
                    }
                }
                f.annotations.check().map_err(err)?;
            }
        }
        Ok(())
    }
}

/// Naive English pluralization of the last word of a phrase.
pub fn pluralize(phrase: &str) -> String {
    let (head, last) = match phrase.rsplit_once(' ') {
        Some((h, l)) => (format!("{h} "), l),
        None => (String::new(), phrase),
    };
    let plural = match last {
        "person" => "people".to_string(),
        "man" => "men".to_string(),
        "woman" => "women".to_string(),
        "child" => "children".to_string(),
        w if w.ends_with('y')
            && !w.ends_with("ay")
            && !w.ends_with("ey")
            && !w.ends_with("oy")
            && !w.ends_with("uy") =>
        {
            format!("{}ies", &w[..w.len() - 1])
        }
        w if w.ends_with('s') || w.ends_with('x') || w.ends_with("ch") || w.ends_with("sh") || w.ends_with('z') => {
            format!("{w}es")
        }
        w => format!("{w}s"),
    };
    format!("{head}{plural}")
}
