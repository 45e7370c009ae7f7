//! Line-oriented text form of templates.
//!
//! ```text
//! // comment
//! #[family=canonical-selection, op=select_eq]
//! rule wf_restaurant := f:fname_restaurant_string "equal to" v:value_string => cmp[eq](f, v)
//! rule value_string := VALUE => value[String]()
//! ```

use crate::ast::{AggOp, CmpOp, SortDir};
use crate::error::DslError;
use crate::schema::Pos;
use crate::types::TypeTag;

use super::{Family, Item, OpRow, SemFn, Template};

fn op_name(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "eq",
        CmpOp::Ge => "ge",
        CmpOp::Le => "le",
        CmpOp::Substr => "substr",
        CmpOp::Contains => "contains",
        CmpOp::InArray => "in_array",
    }
}

fn parse_op(s: &str) -> Option<CmpOp> {
    CmpOp::ALL.into_iter().find(|op| op_name(*op) == s)
}

fn parse_dir(s: &str) -> Option<SortDir> {
    match s {
        "asc" => Some(SortDir::Asc),
        "desc" => Some(SortDir::Desc),
        _ => None,
    }
}

fn semfn_parts(f: &SemFn) -> (&'static str, Vec<String>) {
    let s = |x: &str| x.to_string();
    match f {
        SemFn::Table { table } => ("table", vec![s(table)]),
        SemFn::Field { table, field } => ("field", vec![s(table), s(field)]),
        SemFn::Slot { ty } => ("value", vec![ty.to_string()]),
        SemFn::Here => ("here", vec![]),
        SemFn::Identity => ("id", vec![]),
        SemFn::Cmp { op, negate: false } => ("cmp", vec![s(op_name(*op))]),
        SemFn::Cmp { op, negate: true } => ("not_cmp", vec![s(op_name(*op))]),
        SemFn::FieldCmp {
            table,
            field,
            op,
            negate,
        } => (
            if *negate { "not_fcmp" } else { "fcmp" },
            vec![s(table), s(field), s(op_name(*op))],
        ),
        SemFn::Both { table, field } => ("both", vec![s(table), s(field)]),
        SemFn::And => ("and", vec![]),
        SemFn::Or => ("or", vec![]),
        SemFn::Select => ("select", vec![]),
        SemFn::SelectTable { table } => ("select_table", vec![s(table)]),
        SemFn::Named { table } => ("named", vec![s(table)]),
        SemFn::Rank { dir } => ("rank", vec![s(dir.keyword())]),
        SemFn::RankN { dir } => ("rank_n", vec![s(dir.keyword())]),
        SemFn::Superlative { field, dir } => ("superlative", vec![s(field), s(dir.keyword())]),
        SemFn::Nearest { field, dir } => ("nearest", vec![s(field), s(dir.keyword())]),
        SemFn::Within { field, op } => ("within", vec![s(field), s(op_name(*op))]),
        SemFn::HowFar { field } => ("how_far", vec![s(field)]),
        SemFn::DistanceFrom { field } => ("distance_from", vec![s(field)]),
        SemFn::Join { link } => ("join", vec![s(link)]),
        SemFn::Exists { link, negate: false } => ("exists", vec![s(link)]),
        SemFn::Exists { link, negate: true } => ("not_exists", vec![s(link)]),
        SemFn::Reverse { table, field } => ("reverse", vec![s(table), s(field)]),
        SemFn::Project => ("project", vec![]),
        SemFn::ProjectField { field } => ("project_field", vec![s(field)]),
        SemFn::Count => ("count", vec![]),
        SemFn::Agg { op } => ("agg", vec![s(op.keyword())]),
        SemFn::ArrayCount => ("array_count", vec![]),
        SemFn::AtLeast { field } => ("at_least", vec![s(field)]),
    }
}

fn build_semfn(name: &str, params: &str) -> Result<SemFn, String> {
    // a type may contain commas, so `value` takes the whole bracket
    if name == "value" {
        let ty: TypeTag = params.trim().parse().map_err(|e| format!("{e}"))?;
        return Ok(SemFn::Slot { ty });
    }
    let p: Vec<String> = if params.trim().is_empty() {
        Vec::new()
    } else {
        params.split(',').map(|x| x.trim().to_string()).collect()
    };
    let want = |n: usize| -> Result<(), String> {
        if p.len() == n {
            Ok(())
        } else {
            Err(format!("`{name}` takes {n} parameters, got {}", p.len()))
        }
    };
    let op = |s: &str| parse_op(s).ok_or_else(|| format!("unknown operator `{s}`"));
    let dir = |s: &str| parse_dir(s).ok_or_else(|| format!("unknown direction `{s}`"));
    let f = match name {
        "table" => {
            want(1)?;
            SemFn::Table { table: p[0].clone() }
        }
        "field" => {
            want(2)?;
            SemFn::Field {
                table: p[0].clone(),
                field: p[1].clone(),
            }
        }
        "here" => {
            want(0)?;
            SemFn::Here
        }
        "id" => {
            want(0)?;
            SemFn::Identity
        }
        "cmp" | "not_cmp" => {
            want(1)?;
            SemFn::Cmp {
                op: op(&p[0])?,
                negate: name == "not_cmp",
            }
        }
        "fcmp" | "not_fcmp" => {
            want(3)?;
            SemFn::FieldCmp {
                table: p[0].clone(),
                field: p[1].clone(),
                op: op(&p[2])?,
                negate: name == "not_fcmp",
            }
        }
        "both" => {
            want(2)?;
            SemFn::Both {
                table: p[0].clone(),
                field: p[1].clone(),
            }
        }
        "and" => {
            want(0)?;
            SemFn::And
        }
        "or" => {
            want(0)?;
            SemFn::Or
        }
        "select" => {
            want(0)?;
            SemFn::Select
        }
        "select_table" => {
            want(1)?;
            SemFn::SelectTable { table: p[0].clone() }
        }
        "named" => {
            want(1)?;
            SemFn::Named { table: p[0].clone() }
        }
        "rank" => {
            want(1)?;
            SemFn::Rank { dir: dir(&p[0])? }
        }
        "rank_n" => {
            want(1)?;
            SemFn::RankN { dir: dir(&p[0])? }
        }
        "superlative" => {
            want(2)?;
            SemFn::Superlative {
                field: p[0].clone(),
                dir: dir(&p[1])?,
            }
        }
        "nearest" => {
            want(2)?;
            SemFn::Nearest {
                field: p[0].clone(),
                dir: dir(&p[1])?,
            }
        }
        "within" => {
            want(2)?;
            SemFn::Within {
                field: p[0].clone(),
                op: op(&p[1])?,
            }
        }
        "how_far" => {
            want(1)?;
            SemFn::HowFar { field: p[0].clone() }
        }
        "distance_from" => {
            want(1)?;
            SemFn::DistanceFrom { field: p[0].clone() }
        }
        "join" => {
            want(1)?;
            SemFn::Join { link: p[0].clone() }
        }
        "exists" | "not_exists" => {
            want(1)?;
            SemFn::Exists {
                link: p[0].clone(),
                negate: name == "not_exists",
            }
        }
        "reverse" => {
            want(2)?;
            SemFn::Reverse {
                table: p[0].clone(),
                field: p[1].clone(),
            }
        }
        "project" => {
            want(0)?;
            SemFn::Project
        }
        "project_field" => {
            want(1)?;
            SemFn::ProjectField { field: p[0].clone() }
        }
        "count" => {
            want(0)?;
            SemFn::Count
        }
        "agg" => {
            want(1)?;
            SemFn::Agg {
                op: AggOp::from_keyword(&p[0]).ok_or_else(|| format!("unknown aggregate `{}`", p[0]))?,
            }
        }
        "array_count" => {
            want(0)?;
            SemFn::ArrayCount
        }
        "at_least" => {
            want(1)?;
            SemFn::AtLeast { field: p[0].clone() }
        }
        _ => return Err(format!("unknown semantic function `{name}`")),
    };
    Ok(f)
}

/// One template, preceded by its attribute line when it has attributes.
pub fn print_template(t: &Template) -> String {
    let mut out = String::new();
    let mut attrs = Vec::new();
    if let Some(f) = t.family {
        attrs.push(format!("family={}", f.name()));
    }
    if let Some(op) = t.op {
        attrs.push(format!("op={}", op.name()));
    }
    if let Some(pos) = t.pos {
        attrs.push(format!("pos={}", pos.name()));
    }
    if !attrs.is_empty() {
        out.push_str(&format!("#[{}]\n", attrs.join(", ")));
    }
    out.push_str(&format!("rule {} :=", t.lhs));
    for item in &t.rhs {
        match item {
            Item::Literal(w) => out.push_str(&format!(" \"{w}\"")),
            Item::Slot => out.push_str(" VALUE"),
            Item::Var { name, nt } => out.push_str(&format!(" {name}:{nt}")),
        }
    }
    let (name, params) = semfn_parts(&t.semfn);
    out.push_str(&format!(" => {name}[{}]({})", params.join(","), t.args.join(", ")));
    out
}

pub fn print_templates(templates: &[Template]) -> String {
    let mut out = String::new();
    for t in templates {
        out.push_str(&print_template(t));
        out.push('\n');
    }
    out
}

pub fn parse_templates(text: &str) -> Result<Vec<Template>, DslError> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, Attrs)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        let err = |message: String| DslError { line: line_no, message };
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        if let Some(body) = line.strip_prefix("#[") {
            if pending.is_some() {
                return Err(err("attribute line must be followed by a rule".into()));
            }
            let body = body
                .strip_suffix(']')
                .ok_or_else(|| err("unterminated attribute".into()))?;
            pending = Some((line_no, parse_attrs(body).map_err(err)?));
            continue;
        }
        let rest = line
            .strip_prefix("rule ")
            .ok_or_else(|| err("expected `rule` or `#[`".into()))?;
        let mut t = parse_rule(rest).map_err(err)?;
        if let Some((_, attrs)) = pending.take() {
            t.family = attrs.family;
            t.op = attrs.op;
            t.pos = attrs.pos;
        }
        t.check().map_err(err)?;
        out.push(t);
    }
    if let Some((line, _)) = pending {
        return Err(DslError {
            line,
            message: "attribute line must be followed by a rule".into(),
        });
    }
    Ok(out)
}

#[derive(Default)]
struct Attrs {
    family: Option<Family>,
    op: Option<OpRow>,
    pos: Option<Pos>,
}

fn parse_attrs(body: &str) -> Result<Attrs, String> {
    let mut a = Attrs::default();
    for part in body.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("attribute `{}` has no value", part.trim()))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "family" => a.family = Some(Family::from_name(v).ok_or_else(|| format!("unknown family `{v}`"))?),
            "op" => a.op = Some(OpRow::from_name(v).ok_or_else(|| format!("unknown operator row `{v}`"))?),
            "pos" => a.pos = Some(Pos::from_name(v).ok_or_else(|| format!("unknown part of speech `{v}`"))?),
            _ => return Err(format!("unknown attribute `{k}`")),
        }
    }
    Ok(a)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_rule(text: &str) -> Result<Template, String> {
    let (lhs, rest) = text.split_once(":=").ok_or("expected `:=`")?;
    let lhs = lhs.trim();
    if !is_ident(lhs) {
        return Err(format!("invalid nonterminal `{lhs}`"));
    }
    let arrow = rest.rfind("=>").ok_or("expected `=>`")?;
    let (body, sem) = (&rest[..arrow], &rest[arrow + 2..]);

    let mut rhs = Vec::new();
    let mut s = body.trim_start();
    while !s.is_empty() {
        if let Some(after) = s.strip_prefix('"') {
            let end = after.find('"').ok_or("unterminated literal")?;
            let words = after[..end].trim();
            if words.is_empty() {
                return Err("empty literal".into());
            }
            rhs.push(Item::Literal(words.to_string()));
            s = after[end + 1..].trim_start();
            continue;
        }
        let end = s.find(char::is_whitespace).unwrap_or(s.len());
        let tok = &s[..end];
        s = s[end..].trim_start();
        if tok == "VALUE" {
            rhs.push(Item::Slot);
        } else if let Some((name, nt)) = tok.split_once(':') {
            if !is_ident(name) || !is_ident(nt) {
                return Err(format!("invalid binding `{tok}`"));
            }
            rhs.push(Item::Var {
                name: name.into(),
                nt: nt.into(),
            });
        } else {
            return Err(format!("unexpected `{tok}`; literals must be quoted"));
        }
    }

    let sem = sem.trim();
    let open = sem.find('[').ok_or("expected `[` after the semantic function name")?;
    let close = sem.rfind(']').ok_or("expected `]`")?;
    let name = sem[..open].trim();
    let params = &sem[open + 1..close];
    let call = sem[close + 1..].trim();
    let args = call
        .strip_prefix('(')
        .and_then(|c| c.strip_suffix(')'))
        .ok_or("expected `(args)`")?;
    let args: Vec<String> = args
        .split(',')
        .map(|a| a.trim().to_string())
        .filter(|a| !a.is_empty())
        .collect();
    let semfn = build_semfn(name, params)?;
    Ok(Template {
        lhs: lhs.to_string(),
        rhs,
        semfn,
        args,
        family: None,
        op: None,
        pos: None,
    })
}
