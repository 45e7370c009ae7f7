//! Static type checking of queries against an annotated schema.
//!
//! Besides the output row type, the checker infers the type of every
//! placeholder from its context and records which table field it is compared
//! against; augmentation uses that to pick values.

use std::collections::BTreeMap;

use crate::ast::{AggOp, BinOp, CmpOp, Expr, Filter, Query};
use crate::error::TypeError;
use crate::schema::NlSchema;
use crate::types::{Dimension, RowType, TypeTag};
use crate::value::Value;

/// (table, field) a column was read from.
pub type Origin = Option<(String, String)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotRole {
    /// Compared against a column with this operator.
    Compare(CmpOp),
    /// Entity name inside `lookup ( VALUE_k , @Table )`.
    LookupName,
    /// Row position in an index or slice.
    Position,
}

/// Inferred information about one placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotInfo {
    pub id: u32,
    pub ty: TypeTag,
    pub origin: Origin,
    pub role: SlotRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Typed {
    pub row_type: RowType,
    /// In order of first occurrence in the printed query.
    pub slots: Vec<SlotInfo>,
}

pub fn typecheck(query: &Query, schema: &NlSchema) -> Result<RowType, TypeError> {
    typecheck_with_slots(query, schema).map(|t| t.row_type)
}

pub fn typecheck_with_slots(query: &Query, schema: &NlSchema) -> Result<Typed, TypeError> {
    let mut cx = Checker {
        schema,
        slots: Vec::new(),
    };
    let env = cx.query(query, "$")?;
    Ok(Typed {
        row_type: env.row_type(),
        slots: cx.slots,
    })
}

#[derive(Debug, Clone, Default)]
struct Env {
    fields: BTreeMap<String, (TypeTag, Origin)>,
}

impl Env {
    fn row_type(&self) -> RowType {
        RowType {
            fields: self.fields.iter().map(|(k, (t, _))| (k.clone(), t.clone())).collect(),
        }
    }

    fn shadowed_by(&self, right: &Env) -> Env {
        let mut fields = self.fields.clone();
        for (k, v) in &right.fields {
            fields.insert(k.clone(), v.clone());
        }
        Env { fields }
    }
}

#[derive(Debug, Clone)]
enum VType {
    Known(TypeTag, Origin),
    EmptyArray,
    Hole(u32),
}

struct Checker<'s> {
    schema: &'s NlSchema,
    slots: Vec<SlotInfo>,
}

fn err(path: &str, message: impl Into<String>) -> TypeError {
    TypeError {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Equality compatibility, allowing an enum literal to match an enum field
/// that declares that member.
fn eq_compatible(a: &TypeTag, b: &TypeTag) -> bool {
    match (a, b) {
        (TypeTag::Enum(x), TypeTag::Enum(y)) => {
            x == y || (x.len() == 1 && y.contains(&x[0])) || (y.len() == 1 && x.contains(&y[0]))
        }
        (TypeTag::Array(x), TypeTag::Array(y)) => eq_compatible(x, y),
        _ => a == b,
    }
}

impl<'s> Checker<'s> {
    fn record_slot(&mut self, id: u32, ty: TypeTag, origin: Origin, role: SlotRole) {
        if self.slots.iter().any(|s| s.id == id) {
            return;
        }
        self.slots.push(SlotInfo { id, ty, origin, role });
    }

    fn query(&mut self, q: &Query, path: &str) -> Result<Env, TypeError> {
        match q {
            Query::Table(t) => {
                let def = self
                    .schema
                    .table(t)
                    .ok_or_else(|| err(path, format!("unknown table {t}")))?;
                let mut env = Env::default();
                for (name, f) in &def.fields {
                    env.fields
                        .insert(name.clone(), (f.field_type(), Some((t.clone(), name.clone()))));
                }
                env.fields.insert(
                    "id".into(),
                    (TypeTag::EntityRef(t.clone()), Some((t.clone(), "id".into()))),
                );
                Ok(env)
            }
            Query::Selection { inner, filter } => {
                let env = self.query(inner, &format!("{path}.inner"))?;
                self.filter(filter, &env, &format!("{path}.filter"))?;
                Ok(env)
            }
            Query::Projection { fields, inner } => {
                let env = self.query(inner, &format!("{path}.inner"))?;
                if fields.is_empty() {
                    return Err(err(path, "projection needs at least one field"));
                }
                let mut out = Env::default();
                for f in fields {
                    let entry = env
                        .fields
                        .get(f)
                        .ok_or_else(|| err(path, format!("unknown field {f} in projection")))?;
                    if out.fields.insert(f.clone(), entry.clone()).is_some() {
                        return Err(err(path, format!("field {f} projected twice")));
                    }
                }
                if let Some(id) = env.fields.get("id") {
                    out.fields.insert("id".into(), id.clone());
                }
                Ok(out)
            }
            Query::Aggregation { op, field, inner } => {
                let env = self.query(inner, &format!("{path}.inner"))?;
                let result = match (op, field) {
                    (AggOp::Count, None) => TypeTag::Number,
                    (AggOp::Count, Some(_)) => return Err(err(path, "count aggregation takes no field")),
                    (_, None) => return Err(err(path, format!("{} aggregation needs a field", op.keyword()))),
                    (op, Some(f)) => {
                        let (ty, _) = env
                            .fields
                            .get(f)
                            .ok_or_else(|| err(path, format!("unknown field {f}")))?;
                        let ok = match op {
                            AggOp::Sum | AggOp::Avg => ty.is_numeric(),
                            _ => ty.is_ordered(),
                        };
                        if !ok {
                            return Err(err(path, format!("cannot take {} of {f}: {ty}", op.keyword())));
                        }
                        ty.clone()
                    }
                };
                let mut out = Env::default();
                out.fields.insert("result".into(), (result, None));
                Ok(out)
            }
            Query::Computation { expr, alias, inner } => {
                let mut env = self.query(inner, &format!("{path}.inner"))?;
                let ty = self.expr(expr, &env, &format!("{path}.expr"))?;
                let name = alias.clone().unwrap_or_else(|| expr.default_name());
                env.fields.insert(name, (ty, None));
                Ok(env)
            }
            Query::Sort { field, inner, .. } => {
                let env = self.query(inner, &format!("{path}.inner"))?;
                let (ty, _) = env
                    .fields
                    .get(field)
                    .ok_or_else(|| err(path, format!("unknown sort field {field}")))?;
                if !ty.is_ordered() {
                    return Err(err(path, format!("cannot sort on {field}: {ty} is not ordered")));
                }
                Ok(env)
            }
            Query::Index { inner, position } => {
                let env = self.query(inner, &format!("{path}.inner"))?;
                self.position(position, &format!("{path}.position"))?;
                Ok(env)
            }
            Query::Slice { inner, from, to } => {
                let env = self.query(inner, &format!("{path}.inner"))?;
                self.position(from, &format!("{path}.from"))?;
                self.position(to, &format!("{path}.to"))?;
                Ok(env)
            }
            Query::Join { left, right } => {
                let l = self.query(left, &format!("{path}.left"))?;
                let r = self.query(right, &format!("{path}.right"))?;
                Ok(l.shadowed_by(&r))
            }
        }
    }

    fn position(&mut self, v: &Value, path: &str) -> Result<(), TypeError> {
        match v {
            Value::Number(_) => Ok(()),
            Value::Placeholder(k) => {
                self.record_slot(*k, TypeTag::Number, None, SlotRole::Position);
                Ok(())
            }
            other => Err(err(
                path,
                format!(
                    "index must be a number literal, found {}",
                    crate::syntax::print_value(other)
                ),
            )),
        }
    }

    fn value(&mut self, v: &Value, env: &Env, path: &str) -> Result<VType, TypeError> {
        let known = |t: TypeTag| Ok(VType::Known(t, None));
        match v {
            Value::Number(x) if x.is_finite() => known(TypeTag::Number),
            Value::Number(_) => Err(err(path, "number is not finite")),
            Value::Measure(x, d) if x.is_finite() => known(TypeTag::Measure(*d)),
            Value::Measure(..) => Err(err(path, "measure is not finite")),
            Value::String(_) => known(TypeTag::String),
            Value::Boolean(_) => known(TypeTag::Boolean),
            Value::Enum(m) => known(TypeTag::Enum(vec![m.clone()])),
            Value::Date(_) | Value::Now => known(TypeTag::Date),
            Value::Time(_) => known(TypeTag::Time),
            Value::Location(loc) => {
                if loc.is_valid() {
                    known(TypeTag::Location)
                } else {
                    Err(err(path, "location out of range"))
                }
            }
            Value::Here => known(TypeTag::Location),
            Value::Entity { table, .. } => {
                if self.schema.has_table(table) {
                    known(TypeTag::EntityRef(table.clone()))
                } else {
                    Err(err(path, format!("unknown table {table}")))
                }
            }
            Value::Lookup { name, table } => {
                if !self.schema.has_table(table) {
                    return Err(err(path, format!("unknown table {table}")));
                }
                match name.as_ref() {
                    Value::String(_) => {}
                    Value::Placeholder(k) => self.record_slot(
                        *k,
                        TypeTag::String,
                        Some((table.clone(), "name".into())),
                        SlotRole::LookupName,
                    ),
                    _ => return Err(err(path, "lookup name must be a string literal")),
                }
                known(TypeTag::EntityRef(table.clone()))
            }
            Value::Field(f) => env
                .fields
                .get(f)
                .map(|(t, o)| VType::Known(t.clone(), o.clone()))
                .ok_or_else(|| err(path, format!("unknown field {f}"))),
            Value::Array(items) => {
                let mut elem: Option<TypeTag> = None;
                for (i, item) in items.iter().enumerate() {
                    let p = format!("{path}[{i}]");
                    let t = match self.value(item, env, &p)? {
                        VType::Known(t, _) => t,
                        _ => return Err(err(&p, "array elements must be literals")),
                    };
                    if t.is_array() {
                        return Err(err(&p, "arrays cannot nest"));
                    }
                    match &elem {
                        None => elem = Some(t),
                        Some(e) if eq_compatible(e, &t) => {}
                        Some(e) => {
                            return Err(err(&p, format!("array mixes {e} and {t}")));
                        }
                    }
                }
                Ok(match elem {
                    Some(e) => VType::Known(TypeTag::array(e), None),
                    None => VType::EmptyArray,
                })
            }
            Value::Placeholder(k) => Ok(VType::Hole(*k)),
        }
    }

    fn filter(&mut self, f: &Filter, env: &Env, path: &str) -> Result<(), TypeError> {
        match f {
            Filter::True | Filter::False => Ok(()),
            Filter::Not(a) => self.filter(a, env, &format!("{path}.arg")),
            Filter::And(a, b) | Filter::Or(a, b) => {
                self.filter(a, env, &format!("{path}.left"))?;
                self.filter(b, env, &format!("{path}.right"))
            }
            Filter::Exists { subquery, filter } => {
                let sub = self.query(subquery, &format!("{path}.subquery"))?;
                let merged = env.shadowed_by(&sub);
                self.filter(filter, &merged, &format!("{path}.filter"))
            }
            Filter::Cmp { lhs, op, rhs } => {
                let l = self.value(lhs, env, &format!("{path}.lhs"))?;
                let r = self.value(rhs, env, &format!("{path}.rhs"))?;
                self.cmp(l, *op, r, path)
            }
        }
    }

    fn cmp(&mut self, l: VType, op: CmpOp, r: VType, path: &str) -> Result<(), TypeError> {
        use VType::*;
        let op_name = op.token();
        match (l, r) {
            (Hole(_), Hole(_)) => Err(err(path, "cannot infer the type of two placeholders")),
            (Hole(k), Known(t, origin)) => {
                let hole_ty = match op {
                    CmpOp::Eq => t,
                    CmpOp::Ge | CmpOp::Le if t.is_ordered() => t,
                    CmpOp::Substr if t == TypeTag::String => t,
                    CmpOp::InArray => match t {
                        TypeTag::Array(e) => *e,
                        other => return Err(err(path, format!("in_array needs an array, found {other}"))),
                    },
                    _ => return Err(err(path, format!("`{op_name}` cannot apply to {t}"))),
                };
                self.record_slot(k, hole_ty, origin, SlotRole::Compare(op));
                Ok(())
            }
            (Known(t, origin), Hole(k)) => {
                let hole_ty = match op {
                    CmpOp::Eq => t,
                    CmpOp::Ge | CmpOp::Le if t.is_ordered() => t,
                    CmpOp::Substr if t == TypeTag::String => t,
                    CmpOp::Contains => match t {
                        TypeTag::Array(e) => *e,
                        other => return Err(err(path, format!("contains needs an array, found {other}"))),
                    },
                    _ => return Err(err(path, format!("`{op_name}` cannot apply to {t}"))),
                };
                self.record_slot(k, hole_ty, origin, SlotRole::Compare(op));
                Ok(())
            }
            (EmptyArray, EmptyArray) | (EmptyArray, Hole(_)) | (Hole(_), EmptyArray) => {
                Err(err(path, "cannot infer the element type of an empty array"))
            }
            (EmptyArray, Known(t, _)) => match op {
                CmpOp::Eq if t.is_array() => Ok(()),
                CmpOp::Contains if !t.is_array() => Ok(()),
                _ => Err(err(path, format!("`{op_name}` cannot compare an empty array with {t}"))),
            },
            (Known(t, _), EmptyArray) => match op {
                CmpOp::Eq if t.is_array() => Ok(()),
                CmpOp::InArray if !t.is_array() => Ok(()),
                _ => Err(err(path, format!("`{op_name}` cannot compare {t} with an empty array"))),
            },
            (Known(a, _), Known(b, _)) => {
                let ok = match op {
                    CmpOp::Eq => eq_compatible(&a, &b),
                    CmpOp::Ge | CmpOp::Le => a.is_ordered() && a == b,
                    CmpOp::Substr => a == TypeTag::String && b == TypeTag::String,
                    CmpOp::Contains => a.element().is_some_and(|e| eq_compatible(e, &b)),
                    CmpOp::InArray => b.element().is_some_and(|e| eq_compatible(&a, e)),
                };
                if ok {
                    Ok(())
                } else {
                    Err(err(path, format!("`{op_name}` cannot compare {a} with {b}")))
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr, env: &Env, path: &str) -> Result<TypeTag, TypeError> {
        match e {
            Expr::Val(v) => match self.value(v, env, path)? {
                VType::Known(t, _) => Ok(t),
                VType::EmptyArray => Err(err(path, "cannot compute an empty array")),
                VType::Hole(_) => Err(err(path, "cannot infer the type of a placeholder here")),
            },
            Expr::Binary(op, a, b) => {
                let ta = self.expr(a, env, &format!("{path}.left"))?;
                let tb = self.expr(b, env, &format!("{path}.right"))?;
                use TypeTag::{Date, Measure, Number};
                let out = match (op, &ta, &tb) {
                    (_, Number, Number) => Some(Number),
                    (BinOp::Add | BinOp::Sub, Measure(x), Measure(y)) if x == y => Some(Measure(*x)),
                    (BinOp::Add | BinOp::Sub, Date, Measure(Dimension::Duration)) => Some(Date),
                    (BinOp::Mul, Number, Measure(d)) | (BinOp::Mul | BinOp::Div, Measure(d), Number) => {
                        Some(Measure(*d))
                    }
                    (BinOp::Div, Measure(x), Measure(y)) if x == y => Some(Number),
                    _ => None,
                };
                out.ok_or_else(|| err(path, format!("`{}` cannot combine {ta} and {tb}", op.token())))
            }
            Expr::Distance(a, b) => {
                let ta = self.expr(a, env, &format!("{path}.left"))?;
                let tb = self.expr(b, env, &format!("{path}.right"))?;
                if ta == TypeTag::Location && tb == TypeTag::Location {
                    Ok(TypeTag::Measure(Dimension::Distance))
                } else {
                    Err(err(path, format!("distance needs two locations, found {ta} and {tb}")))
                }
            }
            Expr::AggOnArray(op, f) => {
                let (t, _) = env
                    .fields
                    .get(f)
                    .ok_or_else(|| err(path, format!("unknown field {f}")))?;
                let elem = t
                    .element()
                    .ok_or_else(|| err(path, format!("{}({f}) needs an array field", op.keyword())))?;
                match op {
                    AggOp::Count => Ok(TypeTag::Number),
                    AggOp::Sum | AggOp::Avg if elem.is_numeric() => Ok(elem.clone()),
                    AggOp::Min | AggOp::Max if elem.is_ordered() => Ok(elem.clone()),
                    _ => Err(err(path, format!("cannot take {} over {t}", op.keyword()))),
                }
            }
        }
    }
}
