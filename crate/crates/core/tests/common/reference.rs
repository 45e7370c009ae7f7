//! A deliberately naive evaluator: every relation is a list of named records,
//! every operator a direct comprehension over it.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use nlq::{AggOp, BinOp, CmpOp, Dimension, Expr, Filter, KnowledgeBase, Location, NlSchema, Query, SortDir, Value};

/// A record: ordered column names plus cells. A missing cell is null.
#[derive(Debug, Clone, PartialEq)]
pub struct Rec {
    pub cols: Vec<String>,
    pub cells: BTreeMap<String, Value>,
}

impl Rec {
    fn get(&self, name: &str) -> Option<&Value> {
        self.cells.get(name)
    }

    fn set(&mut self, name: &str, v: Option<Value>) {
        if !self.cols.iter().any(|c| c == name) {
            self.cols.push(name.to_string());
        }
        match v {
            Some(v) => {
                self.cells.insert(name.to_string(), v);
            }
            None => {
                self.cells.remove(name);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefResult {
    pub cols: Vec<String>,
    pub rows: Vec<BTreeMap<String, Value>>,
}

/// Error kinds the reference reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefError {
    LookupNotFound,
    LookupAmbiguous,
    DivisionByZero,
}

pub struct Ctx<'a> {
    pub kb: &'a KnowledgeBase,
    pub schema: &'a NlSchema,
    pub here: Location,
}

type R<T> = Result<T, RefError>;

fn words(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn haversine(a: &Location, b: &Location) -> f64 {
    let r = 6_371_000.0_f64;
    let (la1, la2) = (a.lat.to_radians(), b.lat.to_radians());
    let dla = la2 - la1;
    let dlo = (b.lon - a.lon).to_radians();
    let h = (dla / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlo / 2.0).sin().powi(2);
    2.0 * r * h.sqrt().atan2((1.0 - h).max(0.0).sqrt())
}

fn eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::String(x), Value::String(y)) => words(x) == words(y),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| eq(p, q)),
        _ => a == b,
    }
}

fn ord(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y),
        (Value::Measure(x, d), Value::Measure(y, e)) if d == e => x.partial_cmp(y),
        (Value::Date(x), Value::Date(y)) => x.partial_cmp(y),
        (Value::Time(x), Value::Time(y)) => x.partial_cmp(y),
        _ => None,
    }
}

fn holds(a: &Value, op: CmpOp, b: &Value) -> bool {
    match op {
        CmpOp::Eq => eq(a, b),
        CmpOp::Ge => matches!(ord(a, b), Some(o) if o != Ordering::Less),
        CmpOp::Le => matches!(ord(a, b), Some(o) if o != Ordering::Greater),
        CmpOp::Substr => matches!((a, b), (Value::String(x), Value::String(y)) if words(x).contains(&words(y))),
        CmpOp::Contains => matches!(a, Value::Array(xs) if xs.iter().any(|x| eq(x, b))),
        CmpOp::InArray => matches!(b, Value::Array(xs) if xs.iter().any(|x| eq(a, x))),
    }
}

impl Ctx<'_> {
    fn lookup(&self, name: &str, table: &str) -> R<Value> {
        let hits: Vec<&String> = self
            .kb
            .rows(table)
            .iter()
            .filter(|r| matches!(r.get("name"), Some(Value::String(n)) if words(n) == words(name)))
            .map(|r| &r.id)
            .collect();
        match hits.as_slice() {
            [] => Err(RefError::LookupNotFound),
            [id] => Ok(Value::Entity {
                table: table.to_string(),
                id: (*id).clone(),
            }),
            _ => Err(RefError::LookupAmbiguous),
        }
    }

    /// Resolves a value against a stack of records, innermost last.
    fn value(&self, v: &Value, env: &[&Rec]) -> R<Option<Value>> {
        Ok(match v {
            Value::Field(f) => env
                .iter()
                .rev()
                .find(|r| r.cols.iter().any(|c| c == f))
                .and_then(|r| r.get(f).cloned()),
            Value::Here => Some(Value::Location(self.here)),
            Value::Lookup { name, table } => match name.as_ref() {
                Value::String(s) => Some(self.lookup(s, table)?),
                _ => None,
            },
            Value::Array(items) => {
                let mut out = Vec::new();
                for i in items {
                    if let Some(x) = self.value(i, env)? {
                        out.push(x);
                    }
                }
                Some(Value::Array(out))
            }
            other => Some(other.clone()),
        })
    }

    fn filter(&self, f: &Filter, env: &[&Rec]) -> R<bool> {
        Ok(match f {
            Filter::True => true,
            Filter::False => false,
            Filter::Not(a) => !self.filter(a, env)?,
            Filter::And(a, b) => {
                let x = self.filter(a, env)?;
                let y = self.filter(b, env)?;
                x && y
            }
            Filter::Or(a, b) => {
                let x = self.filter(a, env)?;
                let y = self.filter(b, env)?;
                x || y
            }
            Filter::Cmp { lhs, op, rhs } => match (self.value(lhs, env)?, self.value(rhs, env)?) {
                (Some(a), Some(b)) => holds(&a, *op, &b),
                _ => false,
            },
            Filter::Exists { subquery, filter } => {
                let sub = self.query(subquery)?;
                let mut any = false;
                for r in &sub {
                    let mut inner = env.to_vec();
                    inner.push(r);
                    if self.filter(filter, &inner)? {
                        any = true;
                    }
                }
                any
            }
        })
    }

    fn expr(&self, e: &Expr, r: &Rec) -> R<Option<Value>> {
        Ok(match e {
            Expr::Val(v) => self.value(v, &[r])?,
            Expr::Distance(a, b) => match (self.expr(a, r)?, self.expr(b, r)?) {
                (Some(Value::Location(p)), Some(Value::Location(q))) => {
                    Some(Value::Measure(haversine(&p, &q), Dimension::Distance))
                }
                _ => None,
            },
            Expr::AggOnArray(op, f) => match r.get(f) {
                Some(Value::Array(xs)) if *op == AggOp::Count => Some(Value::Number(xs.len() as f64)),
                Some(Value::Array(xs)) => agg(*op, xs.iter().collect()),
                _ => None,
            },
            Expr::Binary(op, a, b) => match (self.expr(a, r)?, self.expr(b, r)?) {
                (Some(Value::Number(x)), Some(Value::Number(y))) => Some(Value::Number(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div if y == 0.0 => return Err(RefError::DivisionByZero),
                    BinOp::Div => x / y,
                })),
                (Some(_), Some(_)) => panic!("reference evaluator only covers numeric arithmetic"),
                _ => None,
            },
        })
    }

    pub fn query(&self, q: &Query) -> R<Vec<Rec>> {
        Ok(match q {
            Query::Table(t) => {
                let mut cols = vec!["id".to_string()];
                cols.extend(self.schema.tables[t].fields.keys().cloned());
                self.kb
                    .rows(t)
                    .iter()
                    .map(|row| {
                        let mut cells = row.cells.clone();
                        cells.retain(|k, _| cols.contains(k));
                        cells.insert(
                            "id".into(),
                            Value::Entity {
                                table: t.clone(),
                                id: row.id.clone(),
                            },
                        );
                        Rec {
                            cols: cols.clone(),
                            cells,
                        }
                    })
                    .collect()
            }
            Query::Selection { inner, filter } => {
                let mut out = Vec::new();
                for r in self.query(inner)? {
                    if self.filter(filter, &[&r])? {
                        out.push(r);
                    }
                }
                out
            }
            Query::Projection { fields, inner } => self
                .query(inner)?
                .into_iter()
                .map(|r| {
                    let mut keep: Vec<String> = fields.iter().filter(|f| r.cols.contains(f)).cloned().collect();
                    if r.cols.iter().any(|c| c == "id") && !keep.iter().any(|c| c == "id") {
                        keep.push("id".into());
                    }
                    let cells = r.cells.into_iter().filter(|(k, _)| keep.contains(k)).collect();
                    Rec { cols: keep, cells }
                })
                .collect(),
            Query::Aggregation { op, field, inner } => {
                let rows = self.query(inner)?;
                let result = match (op, field) {
                    (AggOp::Count, _) => Some(Value::Number(rows.len() as f64)),
                    (op, Some(f)) => agg(*op, rows.iter().filter_map(|r| r.get(f)).collect()),
                    (_, None) => None,
                };
                let mut r = Rec {
                    cols: vec![],
                    cells: BTreeMap::new(),
                };
                r.set("result", result);
                vec![r]
            }
            Query::Computation { expr, alias, inner } => {
                let name = alias.clone().unwrap_or_else(|| expr.default_name());
                let mut out = Vec::new();
                for mut r in self.query(inner)? {
                    let v = self.expr(expr, &r)?;
                    r.set(&name, v);
                    out.push(r);
                }
                out
            }
            Query::Sort { field, dir, inner } => {
                let mut rows = self.query(inner)?;
                // stable; nulls last in either direction
                rows.sort_by(|a, b| match (a.get(field), b.get(field)) {
                    (None, None) => Ordering::Equal,
                    (None, _) => Ordering::Greater,
                    (_, None) => Ordering::Less,
                    (Some(x), Some(y)) => {
                        let o = ord(x, y).unwrap_or(Ordering::Equal);
                        if *dir == SortDir::Desc {
                            o.reverse()
                        } else {
                            o
                        }
                    }
                });
                rows
            }
            Query::Index { inner, position } => {
                let rows = self.query(inner)?;
                let n = position_of(position);
                rows.into_iter()
                    .enumerate()
                    .filter(|(i, _)| Some(i + 1) == n)
                    .map(|(_, r)| r)
                    .collect()
            }
            Query::Slice { inner, from, to } => {
                let rows = self.query(inner)?;
                match (position_of(from), position_of(to)) {
                    (Some(a), Some(b)) => rows
                        .into_iter()
                        .enumerate()
                        .filter(|(i, _)| (a..=b).contains(&(i + 1)))
                        .map(|(_, r)| r)
                        .collect(),
                    _ => Vec::new(),
                }
            }
            Query::Join { left, right } => {
                let l = self.query(left)?;
                let r = self.query(right)?;
                let mut out = Vec::new();
                for a in &l {
                    for b in &r {
                        let mut cols: Vec<String> = a.cols.iter().filter(|c| !b.cols.contains(c)).cloned().collect();
                        cols.extend(b.cols.iter().cloned());
                        let mut cells: BTreeMap<String, Value> = a
                            .cells
                            .iter()
                            .filter(|(k, _)| !b.cols.contains(k))
                            .map(|(k, v)| (k.clone(), v.clone()))
                            .collect();
                        cells.extend(b.cells.clone());
                        out.push(Rec { cols, cells });
                    }
                }
                out
            }
        })
    }

    /// Lookups are resolved once per query, before any row is read, so an
    /// unknown name fails the query even when no row would be compared.
    pub fn run(&self, q: &Query) -> R<RefResult> {
        let mut first_error = None;
        q.visit_values(&mut |v| {
            if let Value::Lookup { name, table } = v {
                if let (None, Value::String(n)) = (&first_error, name.as_ref()) {
                    first_error = self.lookup(n, table).err();
                }
            }
        });
        if let Some(e) = first_error {
            return Err(e);
        }
        let rows = self.query(q)?;
        let cols = match rows.first() {
            Some(r) => r.cols.clone(),
            None => Vec::new(),
        };
        Ok(RefResult {
            cols,
            rows: rows.into_iter().map(|r| r.cells).collect(),
        })
    }
}

fn position_of(v: &Value) -> Option<usize> {
    match v {
        Value::Number(x) if *x >= 1.0 && x.fract() == 0.0 => Some(*x as usize),
        _ => None,
    }
}

fn agg(op: AggOp, xs: Vec<&Value>) -> Option<Value> {
    if xs.is_empty() {
        return None;
    }
    let num = |v: &Value| match v {
        Value::Number(x) | Value::Measure(x, _) => Some(*x),
        _ => None,
    };
    let wrap = |x: f64| match xs[0] {
        Value::Measure(_, d) => Value::Measure(x, *d),
        _ => Value::Number(x),
    };
    match op {
        AggOp::Count => Some(Value::Number(xs.len() as f64)),
        AggOp::Sum => Some(wrap(xs.iter().map(|v| num(v)).sum::<Option<f64>>()?)),
        AggOp::Avg => Some(wrap(xs.iter().map(|v| num(v)).sum::<Option<f64>>()? / xs.len() as f64)),
        AggOp::Min => xs
            .iter()
            .copied()
            .reduce(|best, v| if ord(v, best) == Some(Ordering::Less) { v } else { best })
            .cloned(),
        AggOp::Max => xs
            .iter()
            .copied()
            .reduce(|best, v| {
                if ord(v, best) == Some(Ordering::Greater) {
                    v
                } else {
                    best
                }
            })
            .cloned(),
    }
}

fn close(a: &Value, b: &Value) -> bool {
    let near = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => near(*x, *y),
        (Value::Measure(x, d), Value::Measure(y, e)) => d == e && near(*x, *y),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| close(p, q)),
        _ => a == b,
    }
}

/// Whether the engine's result holds the same rows, in the same order, as
/// the reference. An empty result has no column list to compare.
pub fn same(engine: &nlq::ResultSet, reference: &RefResult) -> Result<(), String> {
    if engine.rows.len() != reference.rows.len() {
        return Err(format!(
            "{} rows vs {} expected",
            engine.rows.len(),
            reference.rows.len()
        ));
    }
    if !reference.rows.is_empty() {
        let mut a = engine.columns.clone();
        let mut b = reference.cols.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(format!("columns {a:?} vs {b:?}"));
        }
    }
    for (i, (er, rr)) in engine.rows.iter().zip(&reference.rows).enumerate() {
        for (c, cell) in engine.columns.iter().zip(er) {
            let ok = match (cell, rr.get(c)) {
                (None, None) => true,
                (Some(x), Some(y)) => close(x, y),
                _ => false,
            };
            if !ok {
                return Err(format!("row {i} column {c}: {cell:?} vs {:?}", rr.get(c)));
            }
        }
    }
    Ok(())
}
