//! Query execution over an in-memory knowledge base.
//!
//! Queries are compiled against the column layout of their input so that
//! field references become slot indices; filters under `exists` see a stack
//! of rows, innermost first.

use std::cmp::Ordering;
use std::sync::Arc;

use chrono::NaiveDateTime;
use serde_json::{Map, Value as Json};

use crate::ast::{AggOp, BinOp, CmpOp, Expr, Filter, Query, SortDir};
use crate::error::{QueryError, RuntimeError};
use crate::geo;
use crate::kb::{cell_text, cell_to_json, KnowledgeBase};
use crate::schema::NlSchema;
use crate::typecheck::typecheck;
use crate::types::{Dimension, RowType};
use crate::value::{normalize_string, Location, Value};

/// Values for the user-relative `here` and `now`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecContext {
    pub here: Option<Location>,
    pub now: Option<NaiveDateTime>,
}

impl ExecContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_here(mut self, here: Location) -> Self {
        self.here = Some(here);
        self
    }

    pub fn with_now(mut self, now: NaiveDateTime) -> Self {
        self.now = Some(now);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub row_type: RowType,
    pub columns: Vec<String>,
    /// `None` is a null cell.
    pub rows: Vec<Vec<Option<Value>>>,
}

impl ResultSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, column: &str) -> Option<&Value> {
        self.rows.get(row)?.get(self.column(column)?)?.as_ref()
    }

    /// Ids of the result rows, for results that carry an `id` column.
    pub fn ids(&self) -> Vec<String> {
        (0..self.len())
            .filter_map(|i| match self.get(i, "id") {
                Some(Value::Entity { id, .. }) => Some(id.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> Json {
        Json::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (c, v) in self.columns.iter().zip(row) {
                        obj.insert(c.clone(), v.as_ref().map(cell_to_json).unwrap_or(Json::Null));
                    }
                    Json::Object(obj)
                })
                .collect(),
        )
    }

    /// Header line plus one tab-separated line per row; nulls are empty.
    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.as_ref().map(cell_text).unwrap_or_default())
                .collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Type checks and runs `query`.
pub fn execute(
    query: &Query,
    kb: &KnowledgeBase,
    schema: &NlSchema,
    ctx: &ExecContext,
) -> Result<ResultSet, QueryError> {
    let row_type = typecheck(query, schema)?;
    let rel = Exec { kb, schema, ctx }.query(query)?;
    Ok(ResultSet {
        row_type,
        columns: rel.cols.to_vec(),
        rows: rel
            .rows
            .into_iter()
            .map(|r| r.iter().map(|c| c.as_deref().cloned()).collect())
            .collect(),
    })
}

/// Resolves `lookup ( name , @table )` against the name index.
pub fn resolve_lookup(name: &str, table: &str, kb: &KnowledgeBase) -> Result<Value, RuntimeError> {
    kb.resolve_lookup(name, table).map(|id| Value::Entity {
        table: table.to_string(),
        id,
    })
}

type Cell = Option<Arc<Value>>;
type Row = Vec<Cell>;

struct Rel {
    cols: Arc<[String]>,
    rows: Vec<Row>,
}

impl Rel {
    fn col(&self, name: &str) -> Option<usize> {
        self.cols.iter().position(|c| c == name)
    }
}

enum PVal {
    Const(Cell),
    /// (frame depth from the innermost row, column)
    Slot(usize, usize),
    Array(Vec<PVal>),
}

enum PFilter {
    Const(bool),
    Not(Box<PFilter>),
    And(Box<PFilter>, Box<PFilter>),
    Or(Box<PFilter>, Box<PFilter>),
    Cmp(PVal, CmpOp, PVal),
    Exists(Vec<Row>, Box<PFilter>),
}

enum PExpr {
    Val(PVal),
    Binary(BinOp, Box<PExpr>, Box<PExpr>),
    Distance(Box<PExpr>, Box<PExpr>),
    Agg(AggOp, usize),
}

struct Exec<'a> {
    kb: &'a KnowledgeBase,
    schema: &'a NlSchema,
    ctx: &'a ExecContext,
}

impl Exec<'_> {
    fn query(&self, q: &Query) -> Result<Rel, RuntimeError> {
        match q {
            Query::Table(t) => self.scan(t),
            Query::Selection { inner, filter } => {
                let rel = self.query(inner)?;
                let scopes = [rel.cols.clone()];
                let f = self.compile_filter(filter, &scopes)?;
                let mut rows = Vec::with_capacity(rel.rows.len());
                for row in rel.rows {
                    if eval_filter(&f, &[&row])? {
                        rows.push(row);
                    }
                }
                Ok(Rel { cols: rel.cols, rows })
            }
            Query::Projection { fields, inner } => {
                let rel = self.query(inner)?;
                let mut keep: Vec<usize> = fields.iter().filter_map(|f| rel.col(f)).collect();
                if let Some(id) = rel.col("id") {
                    if !fields.iter().any(|f| f == "id") {
                        keep.push(id);
                    }
                }
                let cols: Arc<[String]> = keep.iter().map(|&i| rel.cols[i].clone()).collect();
                let rows = rel
                    .rows
                    .into_iter()
                    .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
                    .collect();
                Ok(Rel { cols, rows })
            }
            Query::Aggregation { op, field, inner } => {
                let rel = self.query(inner)?;
                let result = match (op, field) {
                    (AggOp::Count, _) => Some(Value::Number(rel.rows.len() as f64)),
                    (op, Some(f)) => {
                        let i = rel.col(f).ok_or_else(|| missing_field(f))?;
                        aggregate(*op, rel.rows.iter().filter_map(|r| r[i].as_deref()))
                    }
                    (_, None) => None,
                };
                Ok(Rel {
                    cols: Arc::from(vec!["result".to_string()]),
                    rows: vec![vec![result.map(Arc::new)]],
                })
            }
            Query::Computation { expr, alias, inner } => {
                let rel = self.query(inner)?;
                let e = self.compile_expr(expr, &rel.cols)?;
                let name = alias.clone().unwrap_or_else(|| expr.default_name());
                let (cols, slot) = match rel.col(&name) {
                    Some(i) => (rel.cols.clone(), i),
                    None => {
                        let mut c = rel.cols.to_vec();
                        c.push(name);
                        let n = c.len() - 1;
                        (Arc::from(c), n)
                    }
                };
                let mut rows = Vec::with_capacity(rel.rows.len());
                for mut row in rel.rows {
                    let v = eval_expr(&e, &row)?.map(Arc::new);
                    if slot == row.len() {
                        row.push(v);
                    } else {
                        row[slot] = v;
                    }
                    rows.push(row);
                }
                Ok(Rel { cols, rows })
            }
            Query::Sort { field, dir, inner } => {
                let mut rel = self.query(inner)?;
                let i = rel.col(field).ok_or_else(|| missing_field(field))?;
                rel.rows.sort_by(|a, b| match (&a[i], &b[i]) {
                    (None, None) => Ordering::Equal,
                    (None, Some(_)) => Ordering::Greater,
                    (Some(_), None) => Ordering::Less,
                    (Some(x), Some(y)) => {
                        let o = order(x, y).unwrap_or(Ordering::Equal);
                        match dir {
                            SortDir::Asc => o,
                            SortDir::Desc => o.reverse(),
                        }
                    }
                });
                Ok(rel)
            }
            Query::Index { inner, position } => {
                let mut rel = self.query(inner)?;
                let n = self.position(position)?;
                rel.rows = match n {
                    Some(n) if n >= 1 && n <= rel.rows.len() => vec![rel.rows.swap_remove(n - 1)],
                    _ => Vec::new(),
                };
                Ok(rel)
            }
            Query::Slice { inner, from, to } => {
                let mut rel = self.query(inner)?;
                let (a, b) = (self.position(from)?, self.position(to)?);
                rel.rows = match (a, b) {
                    (Some(a), Some(b)) if a >= 1 => {
                        let end = b.min(rel.rows.len());
                        if a <= end {
                            rel.rows.drain(a - 1..end).collect()
                        } else {
                            Vec::new()
                        }
                    }
                    _ => Vec::new(),
                };
                Ok(rel)
            }
            Query::Join { left, right } => {
                let l = self.query(left)?;
                let r = self.query(right)?;
                let keep: Vec<usize> = (0..l.cols.len()).filter(|&i| !r.cols.contains(&l.cols[i])).collect();
                let cols: Arc<[String]> = keep
                    .iter()
                    .map(|&i| l.cols[i].clone())
                    .chain(r.cols.iter().cloned())
                    .collect();
                let mut rows = Vec::with_capacity(l.rows.len() * r.rows.len());
                for lr in &l.rows {
                    for rr in &r.rows {
                        let mut row: Row = Vec::with_capacity(cols.len());
                        row.extend(keep.iter().map(|&i| lr[i].clone()));
                        row.extend(rr.iter().cloned());
                        rows.push(row);
                    }
                }
                Ok(Rel { cols, rows })
            }
        }
    }

    fn scan(&self, table: &str) -> Result<Rel, RuntimeError> {
        let def = self
            .schema
            .table(table)
            .ok_or_else(|| RuntimeError::UnknownTable(table.to_string()))?;
        let mut cols = vec!["id".to_string()];
        cols.extend(def.fields.keys().cloned());
        let data = self
            .kb
            .table(table)
            .ok_or_else(|| RuntimeError::UnknownTable(table.to_string()))?;
        let rows = data
            .rows()
            .iter()
            .map(|r| {
                let mut row: Row = Vec::with_capacity(cols.len());
                row.push(Some(Arc::new(Value::Entity {
                    table: table.to_string(),
                    id: r.id.clone(),
                })));
                for f in &cols[1..] {
                    row.push(r.get(f).cloned().map(Arc::new));
                }
                row
            })
            .collect();
        Ok(Rel {
            cols: Arc::from(cols),
            rows,
        })
    }

    fn position(&self, v: &Value) -> Result<Option<usize>, RuntimeError> {
        match v {
            Value::Number(x) if x.fract() == 0.0 && *x >= 1.0 => Ok(Some(*x as usize)),
            Value::Number(_) => Ok(None),
            Value::Placeholder(k) => Err(RuntimeError::Placeholder(*k)),
            _ => Ok(None),
        }
    }

    fn constant(&self, v: &Value) -> Result<Value, RuntimeError> {
        Ok(match v {
            Value::Here => Value::Location(self.ctx.here.ok_or(RuntimeError::MissingContext("here"))?),
            Value::Now => Value::Date(self.ctx.now.ok_or(RuntimeError::MissingContext("now"))?),
            Value::Lookup { name, table } => match name.as_ref() {
                Value::String(s) => resolve_lookup(s, table, self.kb)?,
                Value::Placeholder(k) => return Err(RuntimeError::Placeholder(*k)),
                other => resolve_lookup(&crate::syntax::print_value(other), table, self.kb)?,
            },
            Value::Placeholder(k) => return Err(RuntimeError::Placeholder(*k)),
            other => other.clone(),
        })
    }

    fn compile_value(&self, v: &Value, scopes: &[Arc<[String]>]) -> Result<PVal, RuntimeError> {
        match v {
            Value::Field(f) => {
                for (depth, cols) in scopes.iter().rev().enumerate() {
                    if let Some(i) = cols.iter().position(|c| c == f) {
                        return Ok(PVal::Slot(depth, i));
                    }
                }
                Err(missing_field(f))
            }
            Value::Array(items) => Ok(PVal::Array(
                items
                    .iter()
                    .map(|i| self.compile_value(i, scopes))
                    .collect::<Result<_, _>>()?,
            )),
            other => Ok(PVal::Const(Some(Arc::new(self.constant(other)?)))),
        }
    }

    fn compile_filter(&self, f: &Filter, scopes: &[Arc<[String]>]) -> Result<PFilter, RuntimeError> {
        Ok(match f {
            Filter::True => PFilter::Const(true),
            Filter::False => PFilter::Const(false),
            Filter::Not(a) => PFilter::Not(Box::new(self.compile_filter(a, scopes)?)),
            Filter::And(a, b) => PFilter::And(
                Box::new(self.compile_filter(a, scopes)?),
                Box::new(self.compile_filter(b, scopes)?),
            ),
            Filter::Or(a, b) => PFilter::Or(
                Box::new(self.compile_filter(a, scopes)?),
                Box::new(self.compile_filter(b, scopes)?),
            ),
            Filter::Cmp { lhs, op, rhs } => {
                PFilter::Cmp(self.compile_value(lhs, scopes)?, *op, self.compile_value(rhs, scopes)?)
            }
            Filter::Exists { subquery, filter } => {
                let sub = self.query(subquery)?;
                let mut inner = scopes.to_vec();
                inner.push(sub.cols.clone());
                PFilter::Exists(sub.rows, Box::new(self.compile_filter(filter, &inner)?))
            }
        })
    }

    fn compile_expr(&self, e: &Expr, cols: &Arc<[String]>) -> Result<PExpr, RuntimeError> {
        let scopes = [cols.clone()];
        Ok(match e {
            Expr::Val(v) => PExpr::Val(self.compile_value(v, &scopes)?),
            Expr::Binary(op, a, b) => PExpr::Binary(
                *op,
                Box::new(self.compile_expr(a, cols)?),
                Box::new(self.compile_expr(b, cols)?),
            ),
            Expr::Distance(a, b) => PExpr::Distance(
                Box::new(self.compile_expr(a, cols)?),
                Box::new(self.compile_expr(b, cols)?),
            ),
            Expr::AggOnArray(op, f) => {
                PExpr::Agg(*op, cols.iter().position(|c| c == f).ok_or_else(|| missing_field(f))?)
            }
        })
    }
}

fn missing_field(f: &str) -> RuntimeError {
    // unreachable after type checking; reported rather than panicking
    RuntimeError::UnknownTable(format!("(field {f})"))
}

fn eval_value(v: &PVal, frames: &[&Row]) -> Cell {
    match v {
        PVal::Const(c) => c.clone(),
        PVal::Slot(depth, i) => frames[frames.len() - 1 - depth][*i].clone(),
        PVal::Array(items) => Some(Arc::new(Value::Array(
            items
                .iter()
                .filter_map(|i| eval_value(i, frames).map(|c| (*c).clone()))
                .collect(),
        ))),
    }
}

fn eval_filter(f: &PFilter, frames: &[&Row]) -> Result<bool, RuntimeError> {
    Ok(match f {
        PFilter::Const(b) => *b,
        PFilter::Not(a) => !eval_filter(a, frames)?,
        PFilter::And(a, b) => eval_filter(a, frames)? && eval_filter(b, frames)?,
        PFilter::Or(a, b) => eval_filter(a, frames)? || eval_filter(b, frames)?,
        PFilter::Cmp(l, op, r) => match (eval_value(l, frames), eval_value(r, frames)) {
            (Some(a), Some(b)) => compare(&a, *op, &b),
            _ => false,
        },
        PFilter::Exists(rows, _) if rows.is_empty() => false,
        PFilter::Exists(rows, inner) => {
            let mut local: Vec<&Row> = frames.to_vec();
            local.push(&rows[0]);
            let mut found = false;
            for row in rows {
                *local.last_mut().expect("pushed above") = row;
                if eval_filter(inner, &local)? {
                    found = true;
                    break;
                }
            }
            found
        }
    })
}

fn eval_expr(e: &PExpr, row: &Row) -> Result<Option<Value>, RuntimeError> {
    Ok(match e {
        PExpr::Val(v) => eval_value(v, &[row]).map(|c| (*c).clone()),
        PExpr::Binary(op, a, b) => match (eval_expr(a, row)?, eval_expr(b, row)?) {
            (Some(x), Some(y)) => arith(*op, &x, &y)?,
            _ => None,
        },
        PExpr::Distance(a, b) => match (eval_expr(a, row)?, eval_expr(b, row)?) {
            (Some(Value::Location(p)), Some(Value::Location(q))) => {
                Some(Value::Measure(geo::distance(&p, &q), Dimension::Distance))
            }
            _ => None,
        },
        PExpr::Agg(op, i) => match row[*i].as_deref() {
            Some(Value::Array(items)) => match op {
                AggOp::Count => Some(Value::Number(items.len() as f64)),
                op => aggregate(*op, items.iter()),
            },
            _ => None,
        },
    })
}

fn arith(op: BinOp, a: &Value, b: &Value) -> Result<Option<Value>, RuntimeError> {
    use Value::{Date, Measure, Number};
    let div = |x: f64, y: f64| {
        if y == 0.0 {
            Err(RuntimeError::DivisionByZero)
        } else {
            Ok(x / y)
        }
    };
    let num = |x: f64, y: f64| -> Result<f64, RuntimeError> {
        Ok(match op {
            BinOp::Add => x + y,
            BinOp::Sub => x - y,
            BinOp::Mul => x * y,
            BinOp::Div => div(x, y)?,
        })
    };
    Ok(match (a, b) {
        (Number(x), Number(y)) => Some(Number(num(*x, *y)?)),
        (Measure(x, d), Measure(y, e)) if d == e => match op {
            BinOp::Add | BinOp::Sub => Some(Measure(num(*x, *y)?, *d)),
            BinOp::Div => Some(Number(div(*x, *y)?)),
            BinOp::Mul => None,
        },
        (Measure(x, d), Number(y)) if matches!(op, BinOp::Mul | BinOp::Div) => Some(Measure(num(*x, *y)?, *d)),
        (Number(x), Measure(y, d)) if op == BinOp::Mul => Some(Measure(x * y, *d)),
        (Date(t), Measure(s, Dimension::Duration)) => {
            let delta = chrono::Duration::milliseconds((s * 1000.0).round() as i64);
            match op {
                BinOp::Add => t.checked_add_signed(delta).map(Date),
                BinOp::Sub => t.checked_sub_signed(delta).map(Date),
                _ => None,
            }
        }
        _ => None,
    })
}

/// Sum, average, minimum or maximum of non-null values; `None` when there
/// are none.
fn aggregate<'v>(op: AggOp, values: impl Iterator<Item = &'v Value>) -> Option<Value> {
    let values: Vec<&Value> = values.collect();
    let first = *values.first()?;
    match op {
        AggOp::Count => Some(Value::Number(values.len() as f64)),
        AggOp::Sum | AggOp::Avg => {
            let mut total = 0.0;
            for v in &values {
                total += match v {
                    Value::Number(x) | Value::Measure(x, _) => *x,
                    _ => return None,
                };
            }
            if op == AggOp::Avg {
                total /= values.len() as f64;
            }
            Some(match first {
                Value::Measure(_, d) => Value::Measure(total, *d),
                _ => Value::Number(total),
            })
        }
        AggOp::Min | AggOp::Max => {
            let mut best = first;
            for v in &values[1..] {
                let o = order(v, best);
                let better = match op {
                    AggOp::Min => o == Some(Ordering::Less),
                    _ => o == Some(Ordering::Greater),
                };
                if better {
                    best = v;
                }
            }
            Some(best.clone())
        }
    }
}

/// Ordering on ordered types; `None` for incomparable values.
pub fn order(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y),
        (Value::Measure(x, d), Value::Measure(y, e)) if d == e => x.partial_cmp(y),
        (Value::Date(x), Value::Date(y)) => Some(x.cmp(y)),
        (Value::Time(x), Value::Time(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

/// Runtime equality: strings compare case-insensitively.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::String(x), Value::String(y)) => x == y || normalize_string(x) == normalize_string(y),
        (Value::Entity { table: t1, id: i1 }, Value::Entity { table: t2, id: i2 }) => t1 == t2 && i1 == i2,
        (Value::Array(xs), Value::Array(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| values_equal(x, y))
        }
        _ => a == b,
    }
}

pub fn compare(a: &Value, op: CmpOp, b: &Value) -> bool {
    match op {
        CmpOp::Eq => values_equal(a, b),
        CmpOp::Ge => matches!(order(a, b), Some(Ordering::Greater | Ordering::Equal)),
        CmpOp::Le => matches!(order(a, b), Some(Ordering::Less | Ordering::Equal)),
        CmpOp::Substr => match (a, b) {
            (Value::String(x), Value::String(y)) => normalize_string(x).contains(&normalize_string(y)),
            _ => false,
        },
        CmpOp::Contains => match a {
            Value::Array(items) => items.iter().any(|x| values_equal(x, b)),
            _ => false,
        },
        CmpOp::InArray => match b {
            Value::Array(items) => items.iter().any(|x| values_equal(a, x)),
            _ => false,
        },
    }
}
