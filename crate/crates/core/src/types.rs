//! Static types of the query language.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TypeParseError;

/// Physical dimension of a measure. Values are stored in the base unit of
/// their dimension (see [`crate::value::units`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Duration,
    Distance,
    Currency,
    Weight,
    Speed,
    Temperature,
}

impl Dimension {
    pub const ALL: [Dimension; 6] = [
        Dimension::Duration,
        Dimension::Distance,
        Dimension::Currency,
        Dimension::Weight,
        Dimension::Speed,
        Dimension::Temperature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Duration => "duration",
            Dimension::Distance => "distance",
            Dimension::Currency => "currency",
            Dimension::Weight => "weight",
            Dimension::Speed => "speed",
            Dimension::Temperature => "temperature",
        }
    }

    pub fn from_name(name: &str) -> Option<Dimension> {
        Some(match name {
            "duration" => Dimension::Duration,
            "distance" | "length" => Dimension::Distance,
            "currency" => Dimension::Currency,
            "weight" | "mass" => Dimension::Weight,
            "speed" => Dimension::Speed,
            "temperature" => Dimension::Temperature,
            _ => return None,
        })
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The type of a field, value or expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeTag {
    Number,
    Measure(Dimension),
    String,
    Boolean,
    Enum(Vec<String>),
    Date,
    Time,
    Location,
    EntityRef(String),
    Record(BTreeMap<String, TypeTag>),
    Array(Box<TypeTag>),
}

impl TypeTag {
    pub fn array(elem: TypeTag) -> TypeTag {
        TypeTag::Array(Box::new(elem))
    }

    pub fn element(&self) -> Option<&TypeTag> {
        match self {
            TypeTag::Array(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self, TypeTag::Array(_))
    }

    /// Types that admit `>=`, `<=`, sorting, and min/max.
    pub fn is_ordered(&self) -> bool {
        matches!(
            self,
            TypeTag::Number | TypeTag::Measure(_) | TypeTag::Date | TypeTag::Time
        )
    }

    /// Types that admit sum/avg.
    pub fn is_numeric(&self) -> bool {
        matches!(self, TypeTag::Number | TypeTag::Measure(_))
    }

    /// Checks the structural invariant that arrays never nest.
    pub fn is_well_formed(&self) -> bool {
        match self {
            TypeTag::Array(e) => !e.is_array() && e.is_well_formed(),
            TypeTag::Record(fields) => fields.values().all(TypeTag::is_well_formed),
            TypeTag::Enum(members) => !members.is_empty(),
            _ => true,
        }
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTag::Number => f.write_str("Number"),
            TypeTag::Measure(d) => write!(f, "Measure({d})"),
            TypeTag::String => f.write_str("String"),
            TypeTag::Boolean => f.write_str("Boolean"),
            TypeTag::Enum(members) => write!(f, "Enum({})", members.join(",")),
            TypeTag::Date => f.write_str("Date"),
            TypeTag::Time => f.write_str("Time"),
            TypeTag::Location => f.write_str("Location"),
            TypeTag::EntityRef(t) => write!(f, "Entity({t})"),
            TypeTag::Record(fields) => {
                f.write_str("Record{")?;
                for (i, (name, ty)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{name}:{ty}")?;
                }
                f.write_str("}")
            }
            TypeTag::Array(e) => write!(f, "Array({e})"),
        }
    }
}

impl FromStr for TypeTag {
    type Err = TypeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = TypeParser { src: s, pos: 0 };
        let ty = p.parse()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        if !ty.is_well_formed() {
            return Err(TypeParseError {
                input: s.to_string(),
                message: "nested arrays and empty enums are not allowed".into(),
            });
        }
        Ok(ty)
    }
}

struct TypeParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> TypeParser<'a> {
    fn error(&self, message: &str) -> TypeParseError {
        TypeParseError {
            input: self.src.to_string(),
            message: format!("{message} at offset {}", self.pos),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '.' || c == '-'))
            .unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn expect(&mut self, c: char) -> Result<(), TypeParseError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn peek(&mut self, c: char) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(c)
    }

    fn parse(&mut self) -> Result<TypeTag, TypeParseError> {
        let head = self.ident();
        Ok(match head {
            "Number" => TypeTag::Number,
            "String" => TypeTag::String,
            "Boolean" => TypeTag::Boolean,
            "Date" => TypeTag::Date,
            "Time" => TypeTag::Time,
            "Location" => TypeTag::Location,
            "Currency" => TypeTag::Measure(Dimension::Currency),
            "Measure" => {
                self.expect('(')?;
                let dim = self.ident();
                let dim = Dimension::from_name(dim).ok_or_else(|| self.error("unknown dimension"))?;
                self.expect(')')?;
                TypeTag::Measure(dim)
            }
            "Enum" => {
                self.expect('(')?;
                let mut members = Vec::new();
                loop {
                    let m = self.ident();
                    if m.is_empty() {
                        return Err(self.error("expected enum member"));
                    }
                    members.push(m.to_string());
                    if self.peek(',') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect(')')?;
                TypeTag::Enum(members)
            }
            "Entity" | "EntityRef" => {
                self.expect('(')?;
                let t = self.ident();
                if t.is_empty() {
                    return Err(self.error("expected table name"));
                }
                let t = t.to_string();
                self.expect(')')?;
                TypeTag::EntityRef(t)
            }
            "Array" => {
                self.expect('(')?;
                let e = self.parse()?;
                self.expect(')')?;
                TypeTag::array(e)
            }
            "Record" => {
                self.expect('{')?;
                let mut fields = BTreeMap::new();
                if !self.peek('}') {
                    loop {
                        let name = self.ident().to_string();
                        self.expect(':')?;
                        let ty = self.parse()?;
                        fields.insert(name, ty);
                        if self.peek(',') {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect('}')?;
                TypeTag::Record(fields)
            }
            _ => return Err(self.error("unknown type")),
        })
    }
}

impl Serialize for TypeTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TypeTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Output row type of a query: field name to type. Every table-valued query
/// carries an `id` field; aggregations produce the single field `result`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RowType {
    pub fields: BTreeMap<String, TypeTag>,
}

impl RowType {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&TypeTag> {
        self.fields.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, ty: TypeTag) {
        self.fields.insert(name.into(), ty);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.fields.contains_key(name)
    }

    /// Union of two row types where `right` wins every name collision.
    pub fn shadowed_by(&self, right: &RowType) -> RowType {
        let mut fields = self.fields.clone();
        for (k, v) in &right.fields {
            fields.insert(k.clone(), v.clone());
        }
        RowType { fields }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &TypeTag)> {
        self.fields.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_strings_round_trip() {
        for s in [
            "Number",
            "Measure(distance)",
            "Enum(a,b,c)",
            "Entity(Restaurant)",
            "Array(Entity(Review))",
            "Record{ratingValue:Number,reviewCount:Number}",
            "Location",
        ] {
            let ty: TypeTag = s.parse().unwrap();
            assert_eq!(ty.to_string(), s);
        }
    }

    #[test]
    fn currency_is_a_measure() {
        let ty: TypeTag = "Currency".parse().unwrap();
        assert_eq!(ty, TypeTag::Measure(Dimension::Currency));
    }

    #[test]
    fn nested_arrays_rejected() {
        assert!("Array(Array(Number))".parse::<TypeTag>().is_err());
        assert!("Frobnicate".parse::<TypeTag>().is_err());
    }

    #[test]
    fn shadowing_prefers_right() {
        let mut l = RowType::new();
        l.insert("id", TypeTag::EntityRef("A".into()));
        l.insert("x", TypeTag::Number);
        let mut r = RowType::new();
        r.insert("id", TypeTag::EntityRef("B".into()));
        let u = l.shadowed_by(&r);
        assert_eq!(u.get("id"), Some(&TypeTag::EntityRef("B".into())));
        assert_eq!(u.get("x"), Some(&TypeTag::Number));
    }
}
