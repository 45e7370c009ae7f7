//! Production rules paired with semantic functions.
//!
//! A template `lhs := item* => semfn(vars)` rewrites a nonterminal into a
//! sequence of literal words, typed value slots and bound nonterminals. Its
//! semantic function builds the code fragment from the children's fragments
//! and may reject the combination.

pub mod dsl;
mod expand;
mod semfn;

use std::fmt;

use crate::ast::{AggOp, CmpOp, Filter, Query, SortDir};
use crate::schema::Pos;
use crate::types::{RowType, TypeTag};
use crate::value::Value;

pub use expand::{expand, nonterminals, ExpansionConfig};
pub use semfn::apply_semfn;

pub const ROOT: &str = "question";

/// Grouping of templates by the linguistic construct they cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    CanonicalSelection,
    CanonicalProjection,
    CanonicalJoin,
    CanonicalAggregation,
    CanonicalRanking,
    CanonicalQuantifier,
    CanonicalRowwise,
    SentenceType,
    InterrogativePronoun,
    PosStructure,
    Comparative,
    Superlative,
    Connective,
    ShortenedDistance,
}

impl Family {
    pub const ALL: [Family; 14] = [
        Family::CanonicalSelection,
        Family::CanonicalProjection,
        Family::CanonicalJoin,
        Family::CanonicalAggregation,
        Family::CanonicalRanking,
        Family::CanonicalQuantifier,
        Family::CanonicalRowwise,
        Family::SentenceType,
        Family::InterrogativePronoun,
        Family::PosStructure,
        Family::Comparative,
        Family::Superlative,
        Family::Connective,
        Family::ShortenedDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::CanonicalSelection => "canonical-selection",
            Family::CanonicalProjection => "canonical-projection",
            Family::CanonicalJoin => "canonical-join",
            Family::CanonicalAggregation => "canonical-aggregation",
            Family::CanonicalRanking => "canonical-ranking",
            Family::CanonicalQuantifier => "canonical-quantifier",
            Family::CanonicalRowwise => "canonical-rowwise",
            Family::SentenceType => "sentence-type",
            Family::InterrogativePronoun => "interrogative-pronoun",
            Family::PosStructure => "pos-structure",
            Family::Comparative => "comparative",
            Family::Superlative => "superlative",
            Family::Connective => "connective",
            Family::ShortenedDistance => "shortened-distance",
        }
    }

    pub fn from_name(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The operator rows of the canonical template table. A template tagged with
/// a row is the plain-English rendering of that operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpRow {
    SelectEq,
    SelectGe,
    SelectLe,
    SelectContains,
    Projection,
    Join,
    AggregateCount,
    AggregateOp,
    RankMin,
    RankMax,
    RankMinN,
    RankMaxN,
    Exists,
    NotExists,
    RowDistance,
    RowCount,
}

impl OpRow {
    pub const ALL: [OpRow; 16] = [
        OpRow::SelectEq,
        OpRow::SelectGe,
        OpRow::SelectLe,
        OpRow::SelectContains,
        OpRow::Projection,
        OpRow::Join,
        OpRow::AggregateCount,
        OpRow::AggregateOp,
        OpRow::RankMin,
        OpRow::RankMax,
        OpRow::RankMinN,
        OpRow::RankMaxN,
        OpRow::Exists,
        OpRow::NotExists,
        OpRow::RowDistance,
        OpRow::RowCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpRow::SelectEq => "select_eq",
            OpRow::SelectGe => "select_ge",
            OpRow::SelectLe => "select_le",
            OpRow::SelectContains => "select_contains",
            OpRow::Projection => "projection",
            OpRow::Join => "join",
            OpRow::AggregateCount => "aggregate_count",
            OpRow::AggregateOp => "aggregate_op",
            OpRow::RankMin => "rank_min",
            OpRow::RankMax => "rank_max",
            OpRow::RankMinN => "rank_min_n",
            OpRow::RankMaxN => "rank_max_n",
            OpRow::Exists => "exists",
            OpRow::NotExists => "not_exists",
            OpRow::RowDistance => "row_distance",
            OpRow::RowCount => "row_count",
        }
    }

    pub fn from_name(s: &str) -> Option<OpRow> {
        OpRow::ALL.into_iter().find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    /// One or more literal words.
    Literal(String),
    /// A typed value slot, rendered `VALUE_k`.
    Slot,
    Var {
        name: String,
        nt: String,
    },
}

/// Semantic functions. Bracketed parameters are fixed at instantiation; the
/// bound variables are passed in the order listed by the template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemFn {
    /// `@T`
    Table {
        table: String,
    },
    /// A field of `T`, used as an operand.
    Field {
        table: String,
        field: String,
    },
    /// A placeholder of the given type; entity types become a lookup.
    Slot {
        ty: TypeTag,
    },
    Here,
    Identity,
    /// `(field, value)` to a filter. `Contains` means substring on strings
    /// and membership on arrays.
    Cmp {
        op: CmpOp,
        negate: bool,
    },
    /// `(value)` compared against a fixed field; `Eq` on an array field
    /// becomes membership.
    FieldCmp {
        table: String,
        field: String,
        op: CmpOp,
        negate: bool,
    },
    /// `(a, b)`: an array field holding both values.
    Both {
        table: String,
        field: String,
    },
    And,
    Or,
    /// `(np, filter)`
    Select,
    /// `(filter)` applied to the whole table.
    SelectTable {
        table: String,
    },
    /// `(value)` to the row of `T` with that name.
    Named {
        table: String,
    },
    /// `(np, field)` to the first row after sorting.
    Rank {
        dir: SortDir,
    },
    /// `(count, np, field)` to the first rows after sorting.
    RankN {
        dir: SortDir,
    },
    /// `(np)` ranked on a fixed field.
    Superlative {
        field: String,
        dir: SortDir,
    },
    /// `(np)` ranked on distance from here.
    Nearest {
        field: String,
        dir: SortDir,
    },
    /// `(np, distance)` keeps rows within or beyond a distance from here.
    Within {
        field: String,
        op: CmpOp,
    },
    /// `(np)` with the distance from here added.
    HowFar {
        field: String,
    },
    /// `(np, location)` with the distance from a location added.
    DistanceFrom {
        field: String,
    },
    /// `(a, b)` to the rows of `a` linked from `b` through `link`.
    Join {
        link: String,
    },
    /// `(a, b)` keeps rows of `a` that link to some row of `b`.
    Exists {
        link: String,
        negate: bool,
    },
    /// `(np, value)`: rows of `np` that the named row of `T` links to via `field`.
    Reverse {
        table: String,
        field: String,
    },
    /// `(field, np)`
    Project,
    /// `(np)`
    ProjectField {
        field: String,
    },
    /// `(np)`
    Count,
    /// `(field, np)`
    Agg {
        op: AggOp,
    },
    /// `(field, np)` with the element count of an array field added.
    ArrayCount,
    /// `(np, count)` keeps rows whose array field has at least `count` elements.
    AtLeast {
        field: String,
    },
}

impl SemFn {
    /// Number of bound variables the function takes.
    pub fn arity(&self) -> usize {
        match self {
            SemFn::Table { .. } | SemFn::Field { .. } | SemFn::Slot { .. } | SemFn::Here => 0,
            SemFn::Identity
            | SemFn::FieldCmp { .. }
            | SemFn::SelectTable { .. }
            | SemFn::Named { .. }
            | SemFn::Superlative { .. }
            | SemFn::Nearest { .. }
            | SemFn::HowFar { .. }
            | SemFn::ProjectField { .. }
            | SemFn::Count => 1,
            SemFn::RankN { .. } => 3,
            _ => 2,
        }
    }
}

/// Coarse shape of a table-valued fragment; decides which operators may be
/// stacked on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NpKind {
    /// A table, possibly filtered.
    Plain,
    /// The single row with a given name.
    Named,
    /// Sorted and cut to the first rows.
    Ranked,
    /// Joined or computed; still rows of the table.
    Derived,
    /// A final answer: projection, aggregation or computed column.
    Answer,
}

/// The code fragment a derivation carries.
#[derive(Debug, Clone, PartialEq)]
pub enum Sem {
    Query {
        query: Query,
        /// The table whose rows the fragment describes.
        table: String,
        kind: NpKind,
        row_type: RowType,
    },
    Filter {
        table: String,
        filter: Filter,
    },
    Field {
        table: String,
        field: String,
        ty: TypeTag,
    },
    Value {
        value: Value,
        ty: TypeTag,
    },
}

impl Sem {
    fn shift(&mut self, by: u32) {
        if by == 0 {
            return;
        }
        let mut f = |k: u32| Value::Placeholder(k + by);
        match self {
            Sem::Query { query, .. } => query.map_placeholders(&mut f),
            Sem::Filter { filter, .. } => filter.map_placeholders(&mut f),
            Sem::Field { .. } => {}
            Sem::Value { value, .. } => value.map_placeholders(&mut f),
        }
    }

    /// Printed code, for ordering and display.
    pub fn code(&self) -> String {
        match self {
            Sem::Query { query, .. } => crate::syntax::print(query),
            Sem::Filter { filter, .. } => crate::syntax::print_filter(filter),
            Sem::Field { table, field, .. } => format!("{table}.{field}"),
            Sem::Value { value, .. } => crate::syntax::print_value(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub lhs: String,
    pub rhs: Vec<Item>,
    pub semfn: SemFn,
    /// Variable names passed to the semantic function, in order.
    pub args: Vec<String>,
    pub family: Option<Family>,
    pub op: Option<OpRow>,
    pub pos: Option<Pos>,
}

impl Template {
    pub fn new(lhs: impl Into<String>, rhs: Vec<Item>, semfn: SemFn, args: &[&str]) -> Self {
        Self {
            lhs: lhs.into(),
            rhs,
            semfn,
            args: args.iter().map(|s| s.to_string()).collect(),
            family: None,
            op: None,
            pos: None,
        }
    }

    pub fn family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    pub fn op(mut self, op: OpRow) -> Self {
        self.op = Some(op);
        self
    }

    pub fn pos(mut self, pos: Pos) -> Self {
        self.pos = Some(pos);
        self
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, &str)> {
        self.rhs.iter().filter_map(|i| match i {
            Item::Var { name, nt } => Some((name.as_str(), nt.as_str())),
            _ => None,
        })
    }

    pub fn is_lexical(&self) -> bool {
        self.vars().next().is_none()
    }

    /// Checks that variables are bound once and that the semantic function
    /// receives exactly the bound variables it needs.
    pub fn check(&self) -> Result<(), String> {
        let vars: Vec<&str> = self.vars().map(|(n, _)| n).collect();
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(format!("variable `{v}` bound twice"));
            }
        }
        for a in &self.args {
            if !vars.contains(&a.as_str()) {
                return Err(format!("variable `{a}` is not bound"));
            }
        }
        if self.args.len() != vars.len() {
            return Err("every bound variable must be passed to the semantic function".into());
        }
        if self.args.len() != self.semfn.arity() {
            return Err(format!(
                "semantic function takes {} arguments, got {}",
                self.semfn.arity(),
                self.args.len()
            ));
        }
        let slots = self.rhs.iter().filter(|i| matches!(i, Item::Slot)).count();
        match (&self.semfn, slots) {
            (SemFn::Slot { .. }, 1) => {}
            (SemFn::Slot { .. }, _) => return Err("value templates have exactly one slot".into()),
            (_, 0) => {}
            _ => return Err("only value templates may contain a slot".into()),
        }
        if self.rhs.is_empty() {
            return Err("empty right-hand side".into());
        }
        Ok(())
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&dsl::print_template(self))
    }
}

/// A sentence fragment with its code, produced by expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    /// Lowercase words and `VALUE_k` placeholder tokens.
    pub sentence: Vec<String>,
    pub sem: Sem,
    pub depth: u32,
    /// Ids of the templates used, parent before children.
    pub provenance: Vec<u32>,
    /// Number of placeholders, numbered in sentence order from 0.
    pub slots: u32,
}

impl Derivation {
    pub fn sentence_text(&self) -> String {
        self.sentence.join(" ")
    }

    pub fn query(&self) -> Option<&Query> {
        match &self.sem {
            Sem::Query { query, .. } => Some(query),
            _ => None,
        }
    }

    pub fn code(&self) -> String {
        self.sem.code()
    }
}

/// Parses a `VALUE_k` token.
pub fn placeholder_index(token: &str) -> Option<u32> {
    let digits = token.strip_prefix("VALUE_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Nonterminal naming scheme shared by the library and user DSL files.
pub mod nt {
    use crate::types::TypeTag;

    pub fn np(table: &str) -> String {
        format!("np_{}", table.to_lowercase())
    }

    pub fn fname(table: &str) -> String {
        format!("fname_{}", table.to_lowercase())
    }

    pub fn fname_typed(table: &str, ty: &TypeTag) -> String {
        format!("fname_{}_{}", table.to_lowercase(), type_key(ty))
    }

    pub fn fname_array(table: &str) -> String {
        format!("fname_{}_array", table.to_lowercase())
    }

    pub fn value(ty: &TypeTag) -> String {
        format!("value_{}", type_key(ty))
    }

    /// Filter phrases by the word that attaches them to a noun phrase.
    pub fn filter(kind: &str, table: &str) -> String {
        format!("{kind}_{}", table.to_lowercase())
    }

    pub const LOCATION: &str = "loc";
    pub const ANSWER: &str = "fref";

    pub fn type_key(ty: &TypeTag) -> String {
        match ty {
            TypeTag::Number => "number".into(),
            TypeTag::String => "string".into(),
            TypeTag::Boolean => "boolean".into(),
            TypeTag::Date => "date".into(),
            TypeTag::Time => "time".into(),
            TypeTag::Location => "location".into(),
            TypeTag::Measure(d) => format!("measure_{}", d.name()),
            TypeTag::EntityRef(t) => format!("entity_{}", t.to_lowercase()),
            TypeTag::Enum(members) => {
                let mut s = "enum".to_string();
                for m in members {
                    s.push('_');
                    s.extend(m.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }));
                }
                s
            }
            TypeTag::Record(_) => "record".into(),
            TypeTag::Array(e) => format!("array_{}", type_key(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholder_tokens() {
        assert_eq!(placeholder_index("VALUE_12"), Some(12));
        assert_eq!(placeholder_index("VALUE_"), None);
        assert_eq!(placeholder_index("value_1"), None);
    }

    #[test]
    fn template_check() {
        let t = Template::new(
            "np_a",
            vec![
                Item::Var {
                    name: "n".into(),
                    nt: "np_a".into(),
                },
                Item::Literal("with".into()),
                Item::Var {
                    name: "f".into(),
                    nt: "wf_a".into(),
                },
            ],
            SemFn::Select,
            &["n", "f"],
        );
        assert!(t.check().is_ok());
        let mut bad = t.clone();
        bad.args = vec!["n".into(), "g".into()];
        assert!(bad.check().is_err());
        let mut bad = t;
        bad.args = vec!["n".into()];
        assert!(bad.check().is_err());
    }
}
