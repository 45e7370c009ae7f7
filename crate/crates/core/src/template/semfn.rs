use std::collections::HashMap;

use crate::ast::{AggOp, CmpOp, Expr, Filter, Query};
use crate::schema::NlSchema;
use crate::typecheck::typecheck;
use crate::types::{Dimension, TypeTag};
use crate::value::Value;

use super::{placeholder_index, Derivation, Item, NpKind, Sem, SemFn, Template};

/// Appends words, dropping an article that would follow "the" or "the <count>".
fn push_words(sentence: &mut Vec<String>, words: impl Iterator<Item = String>) {
    for (i, w) in words.enumerate() {
        let n = sentence.len();
        let after_article = sentence[n.saturating_sub(if i == 0 { 2 } else { 1 })..]
            .iter()
            .any(|l| l == "the");
        if !(w == "the" && after_article) {
            sentence.push(w);
        }
    }
}

/// Combines child derivations under `template`. Returns `None` when the
/// combination is ill-typed or meaningless.
pub fn apply_semfn(template: &Template, id: u32, children: &[&Derivation], schema: &NlSchema) -> Option<Derivation> {
    let mut sentence = Vec::new();
    let mut offset = 0u32;
    let mut bound: HashMap<&str, Sem> = HashMap::new();
    let mut provenance = vec![id];
    let mut depth = 0;
    let mut next = 0;
    for item in &template.rhs {
        match item {
            Item::Literal(words) => push_words(&mut sentence, words.split_whitespace().map(str::to_string)),
            Item::Slot => {
                sentence.push(format!("VALUE_{offset}"));
                offset += 1;
            }
            Item::Var { name, .. } => {
                let child = children.get(next)?;
                next += 1;
                push_words(
                    &mut sentence,
                    child.sentence.iter().map(|tok| match placeholder_index(tok) {
                        Some(k) => format!("VALUE_{}", k + offset),
                        None => tok.clone(),
                    }),
                );
                let mut sem = child.sem.clone();
                sem.shift(offset);
                offset += child.slots;
                bound.insert(name.as_str(), sem);
                provenance.extend_from_slice(&child.provenance);
                depth = depth.max(child.depth + 1);
            }
        }
    }
    if next != children.len() {
        return None;
    }
    let args: Vec<Sem> = template
        .args
        .iter()
        .map(|a| bound.remove(a.as_str()))
        .collect::<Option<_>>()?;
    let sem = run(&template.semfn, args, schema)?;
    Some(Derivation {
        sentence,
        sem,
        depth,
        provenance,
        slots: offset,
    })
}

fn query_sem(query: Query, table: &str, kind: NpKind, schema: &NlSchema) -> Option<Sem> {
    let row_type = typecheck(&query, schema).ok()?;
    Some(Sem::Query {
        query,
        table: table.to_string(),
        kind,
        row_type,
    })
}

fn filter_sem(table: &str, filter: Filter, schema: &NlSchema) -> Option<Sem> {
    let probe = Query::table(table).select(filter);
    typecheck(&probe, schema).ok()?;
    let Query::Selection { filter, .. } = probe else {
        unreachable!()
    };
    Some(Sem::Filter {
        table: table.to_string(),
        filter,
    })
}

/// Fields filtered by the selections stacked on a table reference.
fn selected_fields(q: &Query) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = q;
    while let Query::Selection { inner, filter } = cur {
        out.extend(filter.fields());
        cur = inner;
    }
    out
}

fn link_filter(schema: &NlSchema, table: &str, link: &str) -> Option<Filter> {
    let f = schema.field(table, link)?;
    if !matches!(f.ty, TypeTag::EntityRef(_)) {
        return None;
    }
    let op = if f.is_array { CmpOp::InArray } else { CmpOp::Eq };
    Some(Filter::cmp(Value::field("id"), op, Value::field(link)))
}

fn link_target(schema: &NlSchema, table: &str, link: &str) -> Option<String> {
    match &schema.field(table, link)?.ty {
        TypeTag::EntityRef(t) => Some(t.clone()),
        _ => None,
    }
}

fn cmp_filter(field: &str, ty: &TypeTag, op: CmpOp, value: Value, vty: &TypeTag) -> Option<Filter> {
    let lhs = Value::field(field);
    let f = match (op, ty) {
        (CmpOp::Eq | CmpOp::Contains, TypeTag::Array(elem)) if **elem == *vty => {
            Filter::cmp(lhs, CmpOp::Contains, value)
        }
        (CmpOp::Contains, TypeTag::String) if *vty == TypeTag::String => Filter::cmp(lhs, CmpOp::Substr, value),
        (CmpOp::Eq, t) if !t.is_array() => Filter::cmp(lhs, CmpOp::Eq, value),
        (CmpOp::Ge | CmpOp::Le, t) if t.is_ordered() && t == vty => Filter::cmp(lhs, op, value),
        _ => return None,
    };
    Some(f)
}

fn run(semfn: &SemFn, args: Vec<Sem>, schema: &NlSchema) -> Option<Sem> {
    let mut args = args.into_iter();
    let mut next = || args.next();
    use NpKind::*;
    match semfn {
        SemFn::Table { table } => query_sem(Query::table(table), table, Plain, schema),
        SemFn::Field { table, field } => Some(Sem::Field {
            table: table.clone(),
            field: field.clone(),
            ty: schema.field(table, field)?.field_type(),
        }),
        SemFn::Slot { ty } => {
            let value = match ty {
                TypeTag::EntityRef(t) => Value::Lookup {
                    name: Box::new(Value::Placeholder(0)),
                    table: t.clone(),
                },
                _ => Value::Placeholder(0),
            };
            Some(Sem::Value { value, ty: ty.clone() })
        }
        SemFn::Here => Some(Sem::Value {
            value: Value::Here,
            ty: TypeTag::Location,
        }),
        SemFn::Identity => next(),
        SemFn::Cmp { op, negate } => {
            let (Sem::Field { table, field, ty }, Sem::Value { value, ty: vty }) = (next()?, next()?) else {
                return None;
            };
            let f = cmp_filter(&field, &ty, *op, value, &vty)?;
            filter_sem(&table, if *negate { Filter::negate(f) } else { f }, schema)
        }
        SemFn::FieldCmp {
            table,
            field,
            op,
            negate,
        } => {
            let Sem::Value { value, ty: vty } = next()? else {
                return None;
            };
            let ty = schema.field(table, field)?.field_type();
            let f = cmp_filter(field, &ty, *op, value, &vty)?;
            filter_sem(table, if *negate { Filter::negate(f) } else { f }, schema)
        }
        SemFn::Both { table, field } => {
            let (Sem::Value { value: a, ty: ta }, Sem::Value { value: b, ty: tb }) = (next()?, next()?) else {
                return None;
            };
            let ty = schema.field(table, field)?.field_type();
            if !ty.is_array() {
                return None;
            }
            let fa = cmp_filter(field, &ty, CmpOp::Contains, a, &ta)?;
            let fb = cmp_filter(field, &ty, CmpOp::Contains, b, &tb)?;
            filter_sem(table, Filter::and(fa, fb), schema)
        }
        SemFn::And | SemFn::Or => {
            let (Sem::Filter { table: ta, filter: a }, Sem::Filter { table: tb, filter: b }) = (next()?, next()?)
            else {
                return None;
            };
            if ta != tb {
                return None;
            }
            let fa = a.fields();
            let fb = b.fields();
            let f = if matches!(semfn, SemFn::And) {
                // two conditions on one field are either redundant or contradictory
                if fa.iter().any(|x| fb.contains(x)) {
                    return None;
                }
                Filter::and(a, b)
            } else {
                if a == b {
                    return None;
                }
                Filter::or(a, b)
            };
            filter_sem(&ta, f, schema)
        }
        SemFn::Select => {
            let (
                Sem::Query {
                    query,
                    table,
                    kind: Plain,
                    ..
                },
                Sem::Filter { table: ft, filter },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if table != ft {
                return None;
            }
            let existing = selected_fields(&query);
            if filter.fields().iter().any(|f| existing.contains(f)) {
                return None;
            }
            query_sem(query.select(filter), &table, Plain, schema)
        }
        SemFn::SelectTable { table } => {
            let Sem::Filter { table: ft, filter } = next()? else {
                return None;
            };
            if *table != ft {
                return None;
            }
            query_sem(Query::table(table).select(filter), table, Plain, schema)
        }
        SemFn::Named { table } => {
            let Sem::Value { value, ty } = next()? else { return None };
            if ty != TypeTag::EntityRef(table.clone()) {
                return None;
            }
            let q = Query::table(table).select(Filter::cmp(Value::field("id"), CmpOp::Eq, value));
            query_sem(q, table, Named, schema)
        }
        SemFn::Rank { dir } => {
            let (
                Sem::Query {
                    query,
                    table,
                    kind: Plain | Derived,
                    ..
                },
                Sem::Field { table: ft, field, ty },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if table != ft || !ty.is_ordered() {
                return None;
            }
            let q = query.sort(field, *dir).index(Value::Number(1.0));
            query_sem(q, &table, Ranked, schema)
        }
        SemFn::RankN { dir } => {
            let (
                Sem::Value {
                    value: count,
                    ty: TypeTag::Number,
                },
                Sem::Query {
                    query,
                    table,
                    kind: Plain | Derived,
                    ..
                },
                Sem::Field { table: ft, field, ty },
            ) = (next()?, next()?, next()?)
            else {
                return None;
            };
            if table != ft || !ty.is_ordered() {
                return None;
            }
            let q = query.sort(field, *dir).slice(Value::Number(1.0), count);
            query_sem(q, &table, Ranked, schema)
        }
        SemFn::Superlative { field, dir } => {
            let Sem::Query {
                query,
                table,
                kind: Plain | Derived,
                ..
            } = next()?
            else {
                return None;
            };
            if !schema.field(&table, field)?.field_type().is_ordered() {
                return None;
            }
            let q = query.sort(field.clone(), *dir).index(Value::Number(1.0));
            query_sem(q, &table, Ranked, schema)
        }
        SemFn::Nearest { field, dir } => {
            let Sem::Query {
                query,
                table,
                kind: Plain | Derived,
                row_type,
            } = next()?
            else {
                return None;
            };
            if row_type.contains("distance") {
                return None;
            }
            let q = query
                .compute(Expr::distance(Expr::field(field.clone()), Expr::Val(Value::Here)), None)
                .sort("distance", *dir)
                .index(Value::Number(1.0));
            query_sem(q, &table, Ranked, schema)
        }
        SemFn::Within { field, op } => {
            let (
                Sem::Query {
                    query,
                    table,
                    kind: Plain,
                    row_type,
                },
                Sem::Value { value, ty },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if ty != TypeTag::Measure(Dimension::Distance) || row_type.contains("distance") {
                return None;
            }
            let q = query
                .compute(Expr::distance(Expr::field(field.clone()), Expr::Val(Value::Here)), None)
                .select(Filter::cmp(Value::field("distance"), *op, value));
            query_sem(q, &table, Derived, schema)
        }
        SemFn::HowFar { field } => {
            let Sem::Query {
                query,
                table,
                kind: Plain | Named | Ranked,
                row_type,
            } = next()?
            else {
                return None;
            };
            if row_type.contains("distance") {
                return None;
            }
            let q = query.compute(Expr::distance(Expr::field(field.clone()), Expr::Val(Value::Here)), None);
            query_sem(q, &table, Answer, schema)
        }
        SemFn::DistanceFrom { field } => {
            let (
                Sem::Query {
                    query,
                    table,
                    kind: Plain | Named | Ranked,
                    row_type,
                },
                Sem::Value {
                    value,
                    ty: TypeTag::Location,
                },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if row_type.contains("distance") {
                return None;
            }
            let q = query.compute(Expr::distance(Expr::field(field.clone()), Expr::Val(value)), None);
            query_sem(q, &table, Answer, schema)
        }
        SemFn::Join { link } => {
            let (
                Sem::Query {
                    query: a,
                    table: ta,
                    kind: Plain,
                    row_type: ra,
                },
                Sem::Query {
                    query: b,
                    table: tb,
                    kind: Plain | Named | Ranked,
                    ..
                },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if link_target(schema, &tb, link)? != ta || ra.contains(link) {
                return None;
            }
            let filter = link_filter(schema, &tb, link)?;
            query_sem(b.join(a).select(filter), &ta, Derived, schema)
        }
        SemFn::Exists { link, negate } => {
            let (
                Sem::Query {
                    query: a,
                    table: ta,
                    kind: Plain,
                    ..
                },
                Sem::Query {
                    query: b,
                    table: tb,
                    kind: Plain,
                    row_type: rb,
                },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if link_target(schema, &ta, link)? != tb || rb.contains(link) {
                return None;
            }
            if selected_fields(&a).iter().any(|f| f == link) {
                return None;
            }
            let e = Filter::exists(b, link_filter(schema, &ta, link)?);
            let f = if *negate { Filter::negate(e) } else { e };
            query_sem(a.select(f), &ta, Plain, schema)
        }
        SemFn::Reverse { table, field } => {
            let (
                Sem::Query {
                    query,
                    table: tn,
                    kind: Plain,
                    row_type,
                },
                Sem::Value { value, ty },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if link_target(schema, table, field)? != tn
                || row_type.contains(field)
                || ty != TypeTag::EntityRef(table.clone())
            {
                return None;
            }
            let named = Query::table(table).select(Filter::cmp(Value::field("id"), CmpOp::Eq, value));
            let q = named.join(query).select(link_filter(schema, table, field)?);
            query_sem(q, &tn, Derived, schema)
        }
        SemFn::Project => {
            let (Sem::Field { table: ft, field, .. }, Sem::Query { query, table, kind, .. }) = (next()?, next()?)
            else {
                return None;
            };
            if ft != table {
                return None;
            }
            project(query, table, kind, field, schema)
        }
        SemFn::ProjectField { field } => {
            let Sem::Query { query, table, kind, .. } = next()? else {
                return None;
            };
            schema.field(&table, field)?;
            project(query, table, kind, field.clone(), schema)
        }
        SemFn::Count => {
            let Sem::Query {
                query,
                table,
                kind: Plain | Derived,
                ..
            } = next()?
            else {
                return None;
            };
            query_sem(query.aggregate(AggOp::Count, None), &table, Answer, schema)
        }
        SemFn::Agg { op } => {
            let (
                Sem::Field { table: ft, field, ty },
                Sem::Query {
                    query,
                    table,
                    kind: Plain | Derived,
                    ..
                },
            ) = (next()?, next()?)
            else {
                return None;
            };
            let ok = match op {
                AggOp::Count => false,
                AggOp::Sum | AggOp::Avg => ty.is_numeric(),
                AggOp::Min | AggOp::Max => ty.is_ordered(),
            };
            if ft != table || !ok {
                return None;
            }
            query_sem(query.aggregate(*op, Some(field)), &table, Answer, schema)
        }
        SemFn::ArrayCount => {
            let (
                Sem::Field { table: ft, field, ty },
                Sem::Query {
                    query,
                    table,
                    kind,
                    row_type,
                },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if ft != table || !ty.is_array() || kind == Answer || row_type.contains("count") {
                return None;
            }
            let q = query.compute(Expr::AggOnArray(AggOp::Count, field), None);
            query_sem(q, &table, Answer, schema)
        }
        SemFn::AtLeast { field } => {
            let (
                Sem::Query {
                    query,
                    table,
                    kind: Plain,
                    row_type,
                },
                Sem::Value {
                    value,
                    ty: TypeTag::Number,
                },
            ) = (next()?, next()?)
            else {
                return None;
            };
            if !schema.field(&table, field)?.is_array || row_type.contains("count") {
                return None;
            }
            let q = query
                .compute(Expr::AggOnArray(AggOp::Count, field.clone()), None)
                .select(Filter::cmp(Value::field("count"), CmpOp::Ge, value));
            query_sem(q, &table, Derived, schema)
        }
    }
}

fn project(query: Query, table: String, kind: NpKind, field: String, schema: &NlSchema) -> Option<Sem> {
    if kind == NpKind::Answer {
        return None;
    }
    // asking for the value the rows were selected by
    if kind == NpKind::Plain && selected_fields(&query).contains(&field) {
        return None;
    }
    query_sem(query.project(vec![field]), &table, NpKind::Answer, schema)
}
