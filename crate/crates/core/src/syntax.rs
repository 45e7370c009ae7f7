//! Whitespace-tokenized surface syntax: canonical printer and parser.
//!
//! Operator precedence, loosest first:
//!
//! ```text
//! query    := [ f, ... ] of query | aggregate op [f] of query
//!           | compute expr [as f] of query | sort f asc|desc of query
//!           | joined
//! joined   := filtered ( join filtered )*
//! filtered := postfix ( , filter )*
//! postfix  := primary ( [ v ] | [ v : v ] )*
//! primary  := @Table | ( query )
//! ```
//!
//! The printer emits the minimal parentheses for this grammar, so that
//! `parse(print(q)) == q` for every well-formed `q`.

use std::sync::OnceLock;

use regex::Regex;

use crate::ast::{AggOp, BinOp, CmpOp, Expr, Filter, Query, SortDir};
use crate::error::SyntaxError;
use crate::value::{format_date, format_number, format_time, parse_date, parse_time, units, Location, Value};

pub const KEYWORDS: &[&str] = &[
    "of",
    "sort",
    "asc",
    "desc",
    "aggregate",
    "compute",
    "as",
    "join",
    "exists",
    "lookup",
    "here",
    "now",
    "true",
    "false",
    "contains",
    "in_array",
    "location",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Top,
    Joined,
    Filtered,
    Postfix,
}

fn level(q: &Query) -> Level {
    match q {
        Query::Table(_) | Query::Index { .. } | Query::Slice { .. } => Level::Postfix,
        Query::Selection { .. } => Level::Filtered,
        Query::Join { .. } => Level::Joined,
        Query::Projection { .. } | Query::Aggregation { .. } | Query::Computation { .. } | Query::Sort { .. } => {
            Level::Top
        }
    }
}

/// Prints the canonical token stream: single spaces, no trailing whitespace.
pub fn print(q: &Query) -> String {
    let mut out = Printer::default();
    out.query(q, Level::Top);
    out.finish()
}

pub fn print_filter(f: &Filter) -> String {
    let mut out = Printer::default();
    out.filter(f, 0);
    out.finish()
}

pub fn print_value(v: &Value) -> String {
    let mut out = Printer::default();
    out.value(v);
    out.finish()
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = Printer::default();
    out.expr(e);
    out.finish()
}

/// Canonical tokens of a query.
pub fn tokens(q: &Query) -> Vec<String> {
    let mut out = Printer::default();
    out.query(q, Level::Top);
    out.tokens
}

#[derive(Default)]
struct Printer {
    tokens: Vec<String>,
}

impl Printer {
    fn finish(self) -> String {
        self.tokens.join(" ")
    }

    fn tok(&mut self, t: impl Into<String>) {
        self.tokens.push(t.into());
    }

    fn query(&mut self, q: &Query, required: Level) {
        if level(q) < required {
            self.tok("(");
            self.query(q, Level::Top);
            self.tok(")");
            return;
        }
        match q {
            Query::Table(t) => self.tok(format!("@{t}")),
            Query::Selection { inner, filter } => {
                self.query(inner, Level::Filtered);
                self.tok(",");
                self.filter(filter, 0);
            }
            Query::Projection { fields, inner } => {
                self.tok("[");
                for (i, f) in fields.iter().enumerate() {
                    if i > 0 {
                        self.tok(",");
                    }
                    self.tok(f.clone());
                }
                self.tok("]");
                self.tok("of");
                self.query(inner, Level::Top);
            }
            Query::Aggregation { op, field, inner } => {
                self.tok("aggregate");
                self.tok(op.keyword());
                if let Some(f) = field {
                    self.tok(f.clone());
                }
                self.tok("of");
                self.query(inner, Level::Top);
            }
            Query::Computation { expr, alias, inner } => {
                self.tok("compute");
                self.expr(expr);
                if let Some(a) = alias {
                    self.tok("as");
                    self.tok(a.clone());
                }
                self.tok("of");
                self.query(inner, Level::Top);
            }
            Query::Sort { field, dir, inner } => {
                self.tok("sort");
                self.tok(field.clone());
                self.tok(dir.keyword());
                self.tok("of");
                self.query(inner, Level::Top);
            }
            Query::Index { inner, position } => {
                self.query(inner, Level::Postfix);
                self.tok("[");
                self.value(position);
                self.tok("]");
            }
            Query::Slice { inner, from, to } => {
                self.query(inner, Level::Postfix);
                self.tok("[");
                self.value(from);
                self.tok(":");
                self.value(to);
                self.tok("]");
            }
            Query::Join { left, right } => {
                // operands other than atoms are always bracketed
                self.query(left, Level::Postfix);
                self.tok("join");
                self.query(right, Level::Postfix);
            }
        }
    }

    // 0 = or, 1 = and, 2 = unary/atom
    fn filter(&mut self, f: &Filter, required: u8) {
        let lvl = match f {
            Filter::Or(..) => 0,
            Filter::And(..) => 1,
            _ => 2,
        };
        if lvl < required {
            self.tok("(");
            self.filter(f, 0);
            self.tok(")");
            return;
        }
        match f {
            Filter::True => self.tok("true"),
            Filter::False => self.tok("false"),
            Filter::Not(a) => {
                self.tok("!");
                self.filter(a, 2);
            }
            Filter::And(a, b) => {
                self.filter(a, 1);
                self.tok("&&");
                self.filter(b, 2);
            }
            Filter::Or(a, b) => {
                self.filter(a, 0);
                self.tok("||");
                self.filter(b, 1);
            }
            Filter::Cmp { lhs, op, rhs } => {
                if op.is_prefix() {
                    self.tok(op.token());
                    self.tok("(");
                    self.value(lhs);
                    self.tok(",");
                    self.value(rhs);
                    self.tok(")");
                } else {
                    self.value(lhs);
                    self.tok(op.token());
                    self.value(rhs);
                }
            }
            Filter::Exists { subquery, filter } => {
                self.tok("exists");
                self.tok("(");
                self.query(subquery, Level::Top);
                self.tok(")");
                self.tok("{");
                self.filter(filter, 0);
                self.tok("}");
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Val(v) => self.value(v),
            Expr::Binary(op, a, b) => {
                self.tok("(");
                self.expr(a);
                self.tok(op.token());
                self.expr(b);
                self.tok(")");
            }
            Expr::Distance(a, b) => {
                self.tok("distance");
                self.tok("(");
                self.expr(a);
                self.tok(",");
                self.expr(b);
                self.tok(")");
            }
            Expr::AggOnArray(op, f) => {
                self.tok(op.keyword());
                self.tok("(");
                self.tok(f.clone());
                self.tok(")");
            }
        }
    }

    fn value(&mut self, v: &Value) {
        match v {
            Value::Number(x) => self.tok(format_number(*x)),
            Value::Measure(x, dim) => {
                self.tok(format_number(*x));
                self.tok(units::base_unit(*dim));
            }
            Value::String(s) => {
                self.tok("\"");
                for w in s.split_whitespace() {
                    self.tok(w);
                }
                self.tok("\"");
            }
            Value::Boolean(b) => self.tok(if *b { "true" } else { "false" }),
            Value::Enum(m) => self.tok(format!("enum:{m}")),
            Value::Date(d) => self.tok(format_date(d)),
            Value::Time(t) => self.tok(format_time(t)),
            Value::Location(loc) => {
                self.tok("location");
                self.tok("(");
                self.tok(format_number(loc.lat));
                self.tok(",");
                self.tok(format_number(loc.lon));
                self.tok(")");
            }
            Value::Entity { table, id } => self.tok(format!("@{table}:{id}")),
            Value::Here => self.tok("here"),
            Value::Now => self.tok("now"),
            Value::Lookup { name, table } => {
                self.tok("lookup");
                self.tok("(");
                self.value(name);
                self.tok(",");
                self.tok(format!("@{table}"));
                self.tok(")");
            }
            Value::Field(f) => self.tok(f.clone()),
            Value::Array(items) => {
                self.tok("[");
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        self.tok(",");
                    }
                    self.value(item);
                }
                self.tok("]");
            }
            Value::Placeholder(k) => self.tok(format!("VALUE_{k}")),
        }
    }
}

struct Patterns {
    number: Regex,
    date: Regex,
    time: Regex,
    ident: Regex,
    table: Regex,
    entity: Regex,
    placeholder: Regex,
    enum_member: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        number: Regex::new(r"^-?[0-9]+(\.[0-9]+)?$").unwrap(),
        date: Regex::new(r"^[0-9]{4}-[0-9]{2}-[0-9]{2}(T[0-9]{2}:[0-9]{2}(:[0-9]{2})?)?$").unwrap(),
        time: Regex::new(r"^[0-9]{1,2}:[0-9]{2}(:[0-9]{2})?$").unwrap(),
        ident: Regex::new(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$").unwrap(),
        table: Regex::new(r"^@([A-Za-z_][A-Za-z0-9_]*)$").unwrap(),
        entity: Regex::new(r"^@([A-Za-z_][A-Za-z0-9_]*):(\S+)$").unwrap(),
        placeholder: Regex::new(r"^VALUE_([0-9]+)$").unwrap(),
        enum_member: Regex::new(r"^enum:([A-Za-z0-9_]+)$").unwrap(),
    })
}

/// Whether `name` can be printed as a bare field reference.
pub fn is_field_name(name: &str) -> bool {
    let p = patterns();
    p.ident.is_match(name) && !KEYWORDS.contains(&name) && !p.placeholder.is_match(name)
}

pub fn is_table_name(name: &str) -> bool {
    patterns().table.is_match(&format!("@{name}"))
}

pub fn parse(text: &str) -> Result<Query, SyntaxError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let mut p = Parser { toks, pos: 0 };
    let q = p.query()?;
    p.end()?;
    Ok(q)
}

pub fn parse_filter(text: &str) -> Result<Filter, SyntaxError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let mut p = Parser { toks, pos: 0 };
    let f = p.filter()?;
    p.end()?;
    Ok(f)
}

pub fn parse_value(text: &str) -> Result<Value, SyntaxError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let mut p = Parser { toks, pos: 0 };
    let v = p.value()?;
    p.end()?;
    Ok(v)
}

struct Parser<'a> {
    toks: Vec<&'a str>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<&'a str> {
        self.toks.get(self.pos + offset).copied()
    }

    fn is(&self, t: &str) -> bool {
        self.peek() == Some(t)
    }

    fn bump(&mut self) -> Option<&'a str> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            position: self.pos,
            found: self
                .peek()
                .map(|t| format!("`{t}`"))
                .unwrap_or_else(|| "end of input".into()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, t: &str) -> PResult<()> {
        if self.is(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&[t]))
        }
    }

    fn end(&self) -> PResult<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err(&["end of input"]))
        }
    }

    fn field_name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if is_field_name(t) => {
                self.pos += 1;
                Ok(t.to_string())
            }
            _ => Err(self.err(&["field name"])),
        }
    }

    fn table_name(&mut self) -> PResult<String> {
        if let Some(t) = self.peek() {
            if let Some(c) = patterns().table.captures(t) {
                self.pos += 1;
                return Ok(c[1].to_string());
            }
        }
        Err(self.err(&["@Table"]))
    }

    fn query(&mut self) -> PResult<Query> {
        match self.peek() {
            Some("[") => {
                self.bump();
                let mut fields = vec![self.field_name()?];
                while self.is(",") {
                    self.bump();
                    fields.push(self.field_name()?);
                }
                self.expect("]")?;
                self.expect("of")?;
                Ok(self.query()?.project(fields))
            }
            Some("aggregate") => {
                self.bump();
                let op = self
                    .peek()
                    .and_then(AggOp::from_keyword)
                    .ok_or_else(|| self.err(&["count", "sum", "avg", "min", "max"]))?;
                self.bump();
                let field = if self.is("of") { None } else { Some(self.field_name()?) };
                self.expect("of")?;
                Ok(self.query()?.aggregate(op, field))
            }
            Some("compute") => {
                self.bump();
                let expr = self.expr()?;
                let alias = if self.is("as") {
                    self.bump();
                    Some(self.field_name()?)
                } else {
                    None
                };
                self.expect("of")?;
                Ok(self.query()?.compute(expr, alias))
            }
            Some("sort") => {
                self.bump();
                let field = self.field_name()?;
                let dir = match self.bump() {
                    Some("asc") => SortDir::Asc,
                    Some("desc") => SortDir::Desc,
                    _ => {
                        self.pos -= 1;
                        return Err(self.err(&["asc", "desc"]));
                    }
                };
                self.expect("of")?;
                Ok(self.query()?.sort(field, dir))
            }
            _ => self.joined(),
        }
    }

    fn joined(&mut self) -> PResult<Query> {
        let mut left = self.filtered()?;
        while self.is("join") {
            self.bump();
            let right = self.filtered()?;
            left = left.join(right);
        }
        Ok(left)
    }

    fn filtered(&mut self) -> PResult<Query> {
        let mut q = self.postfix()?;
        while self.is(",") {
            self.bump();
            let f = self.filter()?;
            q = q.select(f);
        }
        Ok(q)
    }

    fn postfix(&mut self) -> PResult<Query> {
        let mut q = self.primary()?;
        while self.is("[") {
            self.bump();
            let first = self.value()?;
            if self.is(":") {
                self.bump();
                let to = self.value()?;
                self.expect("]")?;
                q = q.slice(first, to);
            } else {
                self.expect("]")?;
                q = q.index(first);
            }
        }
        Ok(q)
    }

    fn primary(&mut self) -> PResult<Query> {
        if self.is("(") {
            self.bump();
            let q = self.query()?;
            self.expect(")")?;
            return Ok(q);
        }
        if let Some(t) = self.peek() {
            if let Some(c) = patterns().table.captures(t) {
                self.bump();
                return Ok(Query::Table(c[1].to_string()));
            }
        }
        Err(self.err(&["@Table", "(", "[", "aggregate", "compute", "sort"]))
    }

    fn filter(&mut self) -> PResult<Filter> {
        let mut f = self.and_filter()?;
        while self.is("||") {
            self.bump();
            let g = self.and_filter()?;
            f = Filter::or(f, g);
        }
        Ok(f)
    }

    fn and_filter(&mut self) -> PResult<Filter> {
        let mut f = self.unary_filter()?;
        while self.is("&&") {
            self.bump();
            let g = self.unary_filter()?;
            f = Filter::and(f, g);
        }
        Ok(f)
    }

    fn unary_filter(&mut self) -> PResult<Filter> {
        if self.is("!") {
            self.bump();
            return Ok(Filter::negate(self.unary_filter()?));
        }
        self.atom_filter()
    }

    fn is_infix_cmp(t: Option<&str>) -> Option<CmpOp> {
        match t? {
            "==" => Some(CmpOp::Eq),
            ">=" => Some(CmpOp::Ge),
            "<=" => Some(CmpOp::Le),
            "=~" => Some(CmpOp::Substr),
            _ => None,
        }
    }

    fn atom_filter(&mut self) -> PResult<Filter> {
        match self.peek() {
            Some("true") if Self::is_infix_cmp(self.peek_at(1)).is_none() => {
                self.bump();
                Ok(Filter::True)
            }
            Some("false") if Self::is_infix_cmp(self.peek_at(1)).is_none() => {
                self.bump();
                Ok(Filter::False)
            }
            Some("(") => {
                self.bump();
                let f = self.filter()?;
                self.expect(")")?;
                Ok(f)
            }
            Some("exists") => {
                self.bump();
                self.expect("(")?;
                let sub = self.query()?;
                self.expect(")")?;
                self.expect("{")?;
                let f = self.filter()?;
                self.expect("}")?;
                Ok(Filter::exists(sub, f))
            }
            Some(op @ ("contains" | "in_array")) => {
                let op = if op == "contains" {
                    CmpOp::Contains
                } else {
                    CmpOp::InArray
                };
                self.bump();
                self.expect("(")?;
                let lhs = self.value()?;
                self.expect(",")?;
                let rhs = self.value()?;
                self.expect(")")?;
                Ok(Filter::cmp(lhs, op, rhs))
            }
            None => Err(self.err(&["filter"])),
            _ => {
                let lhs = self.value()?;
                let op = Self::is_infix_cmp(self.peek()).ok_or_else(|| self.err(&["==", ">=", "<=", "=~"]))?;
                self.bump();
                let rhs = self.value()?;
                Ok(Filter::cmp(lhs, op, rhs))
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            let op = match self.peek() {
                Some("+") => BinOp::Add,
                Some("-") => BinOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            let rhs = self.term()?;
            e = Expr::Binary(op, Box::new(e), Box::new(rhs));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.factor()?;
        loop {
            let op = match self.peek() {
                Some("*") => BinOp::Mul,
                Some("/") => BinOp::Div,
                _ => return Ok(e),
            };
            self.bump();
            let rhs = self.factor()?;
            e = Expr::Binary(op, Box::new(e), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        let next_is_paren = self.peek_at(1) == Some("(");
        match self.peek() {
            Some("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some("distance") if next_is_paren => {
                self.bump();
                self.bump();
                let a = self.expr()?;
                self.expect(",")?;
                let b = self.expr()?;
                self.expect(")")?;
                Ok(Expr::distance(a, b))
            }
            Some(t) if next_is_paren && AggOp::from_keyword(t).is_some() => {
                let op = AggOp::from_keyword(t).unwrap();
                self.bump();
                self.bump();
                let f = self.field_name()?;
                self.expect(")")?;
                Ok(Expr::AggOnArray(op, f))
            }
            _ => Ok(Expr::Val(self.value()?)),
        }
    }

    fn value(&mut self) -> PResult<Value> {
        let p = patterns();
        let Some(t) = self.peek() else {
            return Err(self.err(&["value"]));
        };
        match t {
            "\"" => {
                self.bump();
                let mut words = Vec::new();
                loop {
                    match self.bump() {
                        Some("\"") => break,
                        Some(w) => words.push(w.to_lowercase()),
                        None => return Err(self.err(&["\""])),
                    }
                }
                return Ok(Value::String(words.join(" ")));
            }
            "true" | "false" => {
                self.bump();
                return Ok(Value::Boolean(t == "true"));
            }
            "here" => {
                self.bump();
                return Ok(Value::Here);
            }
            "now" => {
                self.bump();
                return Ok(Value::Now);
            }
            "lookup" => {
                self.bump();
                self.expect("(")?;
                let name = self.value()?;
                if !matches!(name, Value::String(_) | Value::Placeholder(_)) {
                    self.pos -= 1;
                    return Err(self.err(&["string literal"]));
                }
                self.expect(",")?;
                let table = self.table_name()?;
                self.expect(")")?;
                return Ok(Value::Lookup {
                    name: Box::new(name),
                    table,
                });
            }
            "location" => {
                self.bump();
                self.expect("(")?;
                let lat = self.number()?;
                self.expect(",")?;
                let lon = self.number()?;
                self.expect(")")?;
                return Ok(Value::Location(Location::new(lat, lon)));
            }
            "[" => {
                self.bump();
                let mut items = Vec::new();
                if !self.is("]") {
                    items.push(self.value()?);
                    while self.is(",") {
                        self.bump();
                        items.push(self.value()?);
                    }
                }
                self.expect("]")?;
                return Ok(Value::Array(items));
            }
            _ => {}
        }
        if p.number.is_match(t) {
            let x = self.number()?;
            if let Some(unit) = self.peek().filter(|u| units::is_unit(u)) {
                self.bump();
                let (v, dim) = units::to_base(x, unit).expect("unit checked");
                return Ok(Value::Measure(v, dim));
            }
            return Ok(Value::Number(x));
        }
        if p.date.is_match(t) {
            let d = parse_date(t).ok_or_else(|| self.err(&["valid date"]))?;
            self.bump();
            return Ok(Value::Date(d));
        }
        if p.time.is_match(t) {
            let tm = parse_time(t).ok_or_else(|| self.err(&["valid time"]))?;
            self.bump();
            return Ok(Value::Time(tm));
        }
        if let Some(c) = p.placeholder.captures(t) {
            let k = c[1].parse().map_err(|_| self.err(&["placeholder index"]))?;
            self.bump();
            return Ok(Value::Placeholder(k));
        }
        if let Some(c) = p.entity.captures(t) {
            self.bump();
            return Ok(Value::Entity {
                table: c[1].to_string(),
                id: c[2].to_string(),
            });
        }
        if let Some(c) = p.enum_member.captures(t) {
            self.bump();
            return Ok(Value::Enum(c[1].to_string()));
        }
        if is_field_name(t) {
            self.bump();
            return Ok(Value::Field(t.to_string()));
        }
        Err(self.err(&["value"]))
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek() {
            Some(t) if patterns().number.is_match(t) => {
                let x = t.parse().map_err(|_| self.err(&["number"]))?;
                self.bump();
                Ok(x)
            }
            _ => Err(self.err(&["number"])),
        }
    }
}
