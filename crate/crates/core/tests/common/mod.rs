//! Shared test support: fixture loading, random schemas, knowledge bases and
//! queries, and a reference evaluator written as direct set comprehensions.

#![allow(dead_code)]

pub mod oracle;
pub mod reference;
pub mod worked;

use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveTime};
use nlq::builder::{build, load_documents, AnnotationOverlay, BuildConfig, BuildOutput, SchemaGraph};
use nlq::{
    AggOp, CmpOp, Dimension, Expr, FieldDef, Filter, KnowledgeBase, Location, NlSchema, Query, Row, RowType, SortDir,
    TableDef, TypeTag, Value,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// The bundled restaurant schema and knowledge base.
pub fn restaurants() -> BuildOutput {
    let root = fixtures().join("restaurants");
    let graph = SchemaGraph::load(&root.join("vocab.json")).unwrap();
    let docs = load_documents(&root.join("data")).unwrap();
    let overlay = AnnotationOverlay::load(&root.join("annotations.json")).unwrap();
    build(&graph, &docs, &BuildConfig::default(), Some(&overlay)).unwrap()
}

/// People, organizations and hotels.
pub fn comparison() -> (NlSchema, KnowledgeBase) {
    let root = fixtures().join("comparison");
    let schema = NlSchema::load(&root.join("schema.json")).unwrap();
    let kb = KnowledgeBase::load_dir(&schema, &root.join("kb")).unwrap();
    (schema, kb)
}

/// Stanford campus, used as the user's position in fixture tests.
pub fn stanford() -> Location {
    Location::new(37.4275, -122.1697)
}

const WORDS: &[&str] = &[
    "red", "blue", "green", "sushi", "pizza", "noodle", "bar", "grill", "house",
];
const NAMES: &[&str] = &["alpha", "beta", "gamma", "delta", "alpha beta", "omega", "sigma"];

/// Two linked tables with six fields each.
pub fn random_schema() -> NlSchema {
    let mut s = NlSchema::new();
    let mut a = TableDef::default();
    a.fields.insert("name".into(), FieldDef::new(TypeTag::String, false));
    a.fields.insert("score".into(), FieldDef::new(TypeTag::Number, false));
    a.fields.insert("tags".into(), FieldDef::new(TypeTag::String, true));
    a.fields.insert("opened".into(), FieldDef::new(TypeTag::Date, false));
    a.fields.insert("geo".into(), FieldDef::new(TypeTag::Location, false));
    a.fields
        .insert("owner".into(), FieldDef::new(TypeTag::EntityRef("B".into()), false));
    let mut b = TableDef::default();
    b.fields.insert("name".into(), FieldDef::new(TypeTag::String, false));
    b.fields.insert("score".into(), FieldDef::new(TypeTag::Number, false));
    b.fields.insert(
        "size".into(),
        FieldDef::new(TypeTag::Measure(Dimension::Distance), false),
    );
    b.fields.insert("starts".into(), FieldDef::new(TypeTag::Time, false));
    b.fields
        .insert("members".into(), FieldDef::new(TypeTag::EntityRef("A".into()), true));
    b.fields.insert("open".into(), FieldDef::new(TypeTag::Boolean, false));
    s.tables.insert("A".into(), a);
    s.tables.insert("B".into(), b);
    s
}

fn random_cell(rng: &mut impl Rng, ty: &TypeTag, rows_of: &dyn Fn(&str) -> usize) -> Option<Value> {
    Some(match ty {
        TypeTag::String => Value::string(NAMES.choose(rng)?),
        TypeTag::Number => Value::Number(rng.gen_range(0..=10) as f64 / 2.0),
        TypeTag::Measure(d) => Value::Measure(rng.gen_range(0..=5) as f64 * 500.0, *d),
        TypeTag::Date => Value::Date(
            NaiveDate::from_ymd_opt(2020, rng.gen_range(1..=3), rng.gen_range(1..=5))?.and_time(NaiveTime::MIN),
        ),
        TypeTag::Time => Value::Time(NaiveTime::from_hms_opt(rng.gen_range(6..=12), 0, 0)?),
        TypeTag::Boolean => Value::Boolean(rng.gen()),
        TypeTag::Location => Value::Location(Location::new(
            37.0 + rng.gen_range(0..=8) as f64 / 10.0,
            -122.0 - rng.gen_range(0..=8) as f64 / 10.0,
        )),
        TypeTag::EntityRef(t) => {
            let n = rows_of(t);
            if n == 0 {
                return None;
            }
            Value::Entity {
                table: t.clone(),
                id: format!("{}{}", t.to_lowercase(), rng.gen_range(0..n)),
            }
        }
        _ => return None,
    })
}

/// A knowledge base with at most 20 rows per table and some null cells.
pub fn random_kb(schema: &NlSchema, rng: &mut impl Rng) -> KnowledgeBase {
    let counts: Vec<(String, usize)> = schema
        .tables
        .keys()
        .map(|t| (t.clone(), rng.gen_range(0..=20)))
        .collect();
    let rows_of = |t: &str| counts.iter().find(|(n, _)| n == t).map_or(0, |(_, c)| *c);
    let mut kb = KnowledgeBase::new();
    for (table, n) in &counts {
        kb.ensure_table(table);
        let def = &schema.tables[table];
        for i in 0..*n {
            let mut row = Row::new(format!("{}{i}", table.to_lowercase()));
            for (f, fd) in &def.fields {
                if rng.gen_bool(0.1) {
                    continue;
                }
                let cell = if fd.is_array {
                    let k = rng.gen_range(0..=3);
                    let items: Vec<Value> = (0..k)
                        .filter_map(|_| {
                            if let TypeTag::String = fd.ty {
                                Some(Value::string(WORDS.choose(rng)?))
                            } else {
                                random_cell(rng, &fd.ty, &rows_of)
                            }
                        })
                        .collect();
                    Some(Value::Array(items))
                } else {
                    random_cell(rng, &fd.ty, &rows_of)
                };
                if let Some(c) = cell {
                    row = row.with(f, c);
                }
            }
            kb.insert(table, row);
        }
    }
    kb
}

/// A constant the field could be compared against.
fn random_constant(rng: &mut impl Rng, ty: &TypeTag, kb: &KnowledgeBase) -> Option<Value> {
    let rows_of = |t: &str| kb.rows(t).len();
    match ty {
        TypeTag::EntityRef(t) if rng.gen_bool(0.3) => Some(Value::lookup(NAMES.choose(rng)?, t.clone())),
        TypeTag::Array(e) => random_constant(rng, e, kb),
        other => random_cell(rng, other, &rows_of),
    }
}

fn random_filter(rng: &mut impl Rng, rt: &RowType, kb: &KnowledgeBase, schema: &NlSchema, depth: u32) -> Filter {
    let roll = rng.gen_range(0..100);
    if depth > 0 && roll < 25 {
        let a = random_filter(rng, rt, kb, schema, depth - 1);
        let b = random_filter(rng, rt, kb, schema, depth - 1);
        return match rng.gen_range(0..3) {
            0 => Filter::and(a, b),
            1 => Filter::or(a, b),
            _ => Filter::negate(a),
        };
    }
    if depth > 0 && roll < 35 {
        // inside the braces the subquery's `id` shadows the outer one
        let (sub, link) = if rng.gen() {
            (
                Query::table("A"),
                Filter::cmp(Value::field("id"), CmpOp::InArray, Value::field("members")),
            )
        } else {
            (
                Query::table("B"),
                Filter::cmp(Value::field("owner"), CmpOp::Eq, Value::field("id")),
            )
        };
        let sub_rt = schema.row_type(match &sub {
            Query::Table(t) => t,
            _ => unreachable!(),
        });
        let inner = random_filter(rng, &sub_rt.unwrap(), kb, schema, 0);
        return Filter::exists(sub.select(inner), link);
    }
    if roll < 38 {
        return if rng.gen() { Filter::True } else { Filter::False };
    }
    let fields: Vec<(&String, &TypeTag)> = rt
        .fields
        .iter()
        .filter(|(_, t)| !matches!(t, TypeTag::Location | TypeTag::Record(_)))
        .collect();
    let Some((f, ty)) = fields.choose(rng).copied() else {
        return Filter::True;
    };
    let Some(c) = random_constant(rng, ty, kb) else {
        return Filter::True;
    };
    let field = Value::field(f.clone());
    match ty {
        TypeTag::Array(_) => Filter::cmp(field, CmpOp::Contains, c),
        TypeTag::String if rng.gen_bool(0.3) => {
            let w = WORDS.iter().chain(NAMES).collect::<Vec<_>>();
            let word = w.choose(rng).unwrap().split(' ').next().unwrap().to_string();
            Filter::cmp(field, CmpOp::Substr, Value::string(&word[..word.len().min(3)]))
        }
        t if t.is_ordered() => {
            let op = *[CmpOp::Eq, CmpOp::Ge, CmpOp::Le].choose(rng).unwrap();
            if rng.gen_bool(0.2) {
                Filter::cmp(c, op, field)
            } else {
                Filter::cmp(field, op, c)
            }
        }
        _ => Filter::cmp(field, CmpOp::Eq, c),
    }
}

fn ordered_fields(rt: &RowType) -> Vec<String> {
    rt.fields
        .iter()
        .filter(|(_, t)| t.is_ordered())
        .map(|(f, _)| f.clone())
        .collect()
}

fn random_step(rng: &mut impl Rng, q: &Query, rt: &RowType, kb: &KnowledgeBase, schema: &NlSchema) -> Option<Query> {
    let q = q.clone();
    let names: Vec<String> = rt.fields.keys().cloned().collect();
    Some(match rng.gen_range(0..100) {
        0..=29 => q.select(random_filter(rng, rt, kb, schema, 2)),
        30..=37 => {
            let k = rng.gen_range(1..=names.len().min(3));
            let fields: Vec<String> = names.choose_multiple(rng, k).cloned().collect();
            q.project(fields)
        }
        38..=45 => {
            let op = *AggOp::ALL.choose(rng)?;
            let field = if op == AggOp::Count {
                None
            } else {
                let candidates: Vec<String> = rt
                    .fields
                    .iter()
                    .filter(|(_, t)| match op {
                        AggOp::Sum | AggOp::Avg => t.is_numeric(),
                        _ => t.is_ordered(),
                    })
                    .map(|(f, _)| f.clone())
                    .collect();
                Some(candidates.choose(rng)?.clone())
            };
            q.aggregate(op, field)
        }
        46..=57 => {
            let expr = match rng.gen_range(0..4) {
                0 => Expr::distance(Expr::field("geo"), Expr::Val(Value::Here)),
                1 => Expr::AggOnArray(AggOp::Count, ["tags", "members"].choose(rng)?.to_string()),
                2 => Expr::Binary(
                    *[nlq::BinOp::Add, nlq::BinOp::Mul, nlq::BinOp::Div].choose(rng)?,
                    Box::new(Expr::field("score")),
                    Box::new(Expr::Val(Value::Number(rng.gen_range(0..3) as f64))),
                ),
                _ => Expr::distance(
                    Expr::field("geo"),
                    Expr::Val(Value::Location(Location::new(37.5, -122.5))),
                ),
            };
            let alias = rng.gen_bool(0.2).then(|| "extra".to_string());
            q.compute(expr, alias)
        }
        58..=73 => {
            let f = ordered_fields(rt);
            let dir = if rng.gen() { SortDir::Asc } else { SortDir::Desc };
            q.sort(f.choose(rng)?.clone(), dir)
        }
        74..=81 => q.index(Value::Number(rng.gen_range(0..=4) as f64)),
        82..=89 => {
            let a = rng.gen_range(1..=4);
            let b = rng.gen_range(0..=6);
            q.slice(Value::Number(a as f64), Value::Number(b as f64))
        }
        _ => {
            let other = Query::table(if rng.gen() { "A" } else { "B" });
            let other_rt = schema.row_type(match &other {
                Query::Table(t) => t,
                _ => unreachable!(),
            })?;
            let other = if rng.gen() {
                other.select(random_filter(rng, &other_rt, kb, schema, 1))
            } else {
                other
            };
            if rng.gen() {
                q.join(other)
            } else {
                other.join(q)
            }
        }
    })
}

/// A well-typed query with at most `depth` operators over one table.
pub fn random_query(rng: &mut impl Rng, schema: &NlSchema, kb: &KnowledgeBase, depth: u32) -> Query {
    let tables: Vec<&String> = schema.tables.keys().collect();
    let mut q = Query::table((*tables.choose(rng).unwrap()).clone());
    let steps = rng.gen_range(0..=depth);
    for _ in 0..steps {
        let rt = nlq::typecheck(&q, schema).expect("generated queries type check");
        for _ in 0..20 {
            if let Some(next) = random_step(rng, &q, &rt, kb, schema) {
                if nlq::typecheck(&next, schema).is_ok() {
                    q = next;
                    break;
                }
            }
        }
    }
    q
}

fn random_ident(rng: &mut impl Rng) -> String {
    let base = [
        "rating",
        "name",
        "geo",
        "servesCuisine",
        "id",
        "review",
        "count",
        "distance",
    ];
    let mut s = base.choose(rng).unwrap().to_string();
    if rng.gen_bool(0.2) {
        s.push_str(".value");
    }
    s
}

fn random_number(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..3) {
        0 => rng.gen_range(0..100) as f64,
        1 => rng.gen_range(-500..500) as f64 / 4.0,
        _ => rng.gen_range(0..100000) as f64 / 1000.0,
    }
}

/// Any value the surface syntax can express.
pub fn random_value(rng: &mut impl Rng, depth: u32) -> Value {
    match rng.gen_range(0..14) {
        0 => Value::Number(random_number(rng)),
        1 => Value::Measure(random_number(rng).abs(), *Dimension::ALL.choose(rng).unwrap()),
        2 => {
            let n = rng.gen_range(0..4);
            let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
            Value::String(words.join(" "))
        }
        3 => Value::Boolean(rng.gen()),
        4 => Value::Enum(["open", "closed", "under_repair"].choose(rng).unwrap().to_string()),
        5 => Value::Date(
            NaiveDate::from_ymd_opt(rng.gen_range(1900..2100), rng.gen_range(1..=12), rng.gen_range(1..=28))
                .unwrap()
                .and_hms_opt(rng.gen_range(0..24) * rng.gen_range(0..2), 0, 0)
                .unwrap(),
        ),
        6 => Value::Time(
            NaiveTime::from_hms_opt(rng.gen_range(0..24), rng.gen_range(0..60), rng.gen_range(0..2) * 30).unwrap(),
        ),
        7 => Value::Location(Location::new(
            rng.gen_range(-9000..9000) as f64 / 100.0,
            rng.gen_range(-18000..18000) as f64 / 100.0,
        )),
        8 => Value::Entity {
            table: "Restaurant".into(),
            id: format!("r{}", rng.gen_range(0..50)),
        },
        9 => {
            if rng.gen() {
                Value::Here
            } else {
                Value::Now
            }
        }
        10 => Value::Lookup {
            name: Box::new(if rng.gen() {
                Value::string(NAMES.choose(rng).unwrap())
            } else {
                Value::Placeholder(rng.gen_range(0..5))
            }),
            table: "Person".into(),
        },
        11 => Value::Field(random_ident(rng)),
        12 if depth > 0 => Value::Array((0..rng.gen_range(0..3)).map(|_| random_value(rng, 0)).collect()),
        _ => Value::Placeholder(rng.gen_range(0..10)),
    }
}

fn random_syntax_filter(rng: &mut impl Rng, depth: u32) -> Filter {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..8) {
            0 => Filter::True,
            1 => Filter::False,
            _ => {
                let op = *CmpOp::ALL.choose(rng).unwrap();
                Filter::cmp(Value::field(random_ident(rng)), op, random_value(rng, 1))
            }
        };
    }
    match rng.gen_range(0..4) {
        0 => Filter::negate(random_syntax_filter(rng, depth - 1)),
        1 => Filter::and(
            random_syntax_filter(rng, depth - 1),
            random_syntax_filter(rng, depth - 1),
        ),
        2 => Filter::or(
            random_syntax_filter(rng, depth - 1),
            random_syntax_filter(rng, depth - 1),
        ),
        _ => Filter::exists(random_ast(rng, depth - 1), random_syntax_filter(rng, depth - 1)),
    }
}

fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.4) {
        return match rng.gen_range(0..3) {
            0 => Expr::AggOnArray(*AggOp::ALL.choose(rng).unwrap(), random_ident(rng)),
            _ => Expr::Val(random_value(rng, 0)),
        };
    }
    if rng.gen() {
        Expr::distance(random_expr(rng, depth - 1), random_expr(rng, depth - 1))
    } else {
        let op = *[nlq::BinOp::Add, nlq::BinOp::Sub, nlq::BinOp::Mul, nlq::BinOp::Div]
            .choose(rng)
            .unwrap();
        Expr::Binary(
            op,
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        )
    }
}

/// A syntactically valid query; not necessarily well typed.
pub fn random_ast(rng: &mut impl Rng, depth: u32) -> Query {
    if depth == 0 || rng.gen_bool(0.2) {
        return Query::table(*["Restaurant", "Person", "Review"].choose(rng).unwrap());
    }
    let inner = random_ast(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => inner.select(random_syntax_filter(rng, 2)),
        1 => inner.project((0..rng.gen_range(1..3)).map(|_| random_ident(rng)).collect()),
        2 => {
            let op = *AggOp::ALL.choose(rng).unwrap();
            let field = rng.gen_bool(0.7).then(|| random_ident(rng));
            inner.aggregate(op, field)
        }
        3 => {
            let alias = rng.gen_bool(0.3).then(|| random_ident(rng));
            inner.compute(random_expr(rng, 2), alias)
        }
        4 => inner.sort(random_ident(rng), if rng.gen() { SortDir::Asc } else { SortDir::Desc }),
        5 => inner.index(Value::Number(rng.gen_range(1..10) as f64)),
        6 => inner.slice(
            Value::Number(rng.gen_range(1..5) as f64),
            Value::Placeholder(rng.gen_range(0..3)),
        ),
        _ => inner.join(random_ast(rng, depth - 1)),
    }
}
