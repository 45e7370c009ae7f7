//! Checks that every record of a dataset parses, type checks and runs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{is_copyable, parse_line};
use crate::engine::{execute, ExecContext};
use crate::error::{QueryError, RuntimeError};
use crate::kb::KnowledgeBase;
use crate::schema::NlSchema;
use crate::syntax::parse;
use crate::typecheck::typecheck;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Parse,
    Typecheck,
    Execute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub line: usize,
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub total: usize,
    pub parsed: usize,
    pub typechecked: usize,
    pub executed: usize,
    pub copyable: usize,
    pub parse_pct: f64,
    pub typecheck_pct: f64,
    pub execute_pct: f64,
    pub copyable_pct: f64,
    /// Runtime failures by error kind.
    pub runtime_errors: BTreeMap<String, usize>,
    /// The first failures, in line order.
    pub failures: Vec<Failure>,
    pub warnings: Vec<String>,
}

/// Failures kept in the report.
pub const MAX_FAILURES: usize = 50;

enum Outcome {
    Ok { copyable: bool },
    Failed(Failure, Option<&'static str>),
}

fn runtime_kind(e: &RuntimeError) -> &'static str {
    match e {
        RuntimeError::LookupNotFound { .. } => "lookup_not_found",
        RuntimeError::LookupAmbiguous { .. } => "lookup_ambiguous",
        RuntimeError::DivisionByZero => "division_by_zero",
        RuntimeError::MissingContext(_) => "missing_context",
        RuntimeError::UnknownTable(_) => "unknown_table",
        RuntimeError::Placeholder(_) => "placeholder",
    }
}

fn check_line(text: &str, line: usize, kb: &KnowledgeBase, schema: &NlSchema, ctx: &ExecContext) -> Outcome {
    let fail = |stage, message: String| Outcome::Failed(Failure { line, stage, message }, None);
    let rec = match parse_line(text, line) {
        Ok(r) => r,
        Err(e) => return fail(Stage::Parse, e.to_string()),
    };
    let query = match parse(&rec.code_text()) {
        Ok(q) => q,
        Err(e) => return fail(Stage::Parse, e.to_string()),
    };
    if let Err(e) = typecheck(&query, schema) {
        return fail(Stage::Typecheck, e.to_string());
    }
    match execute(&query, kb, schema, ctx) {
        Ok(_) => Outcome::Ok {
            copyable: is_copyable(&rec),
        },
        Err(QueryError::Runtime(e)) => Outcome::Failed(
            Failure {
                line,
                stage: Stage::Execute,
                message: e.to_string(),
            },
            Some(runtime_kind(&e)),
        ),
        Err(e) => fail(Stage::Execute, e.to_string()),
    }
}

fn pct(n: usize, total: usize) -> f64 {
    if total == 0 {
        100.0
    } else {
        100.0 * n as f64 / total as f64
    }
}

/// Validates dataset TSV text. Blank lines are skipped; line numbers are 1-based.
pub fn validate_text(text: &str, kb: &KnowledgeBase, schema: &NlSchema, ctx: &ExecContext) -> ValidationReport {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let outcomes: Vec<Outcome> = lines
        .par_iter()
        .map(|(n, l)| check_line(l, *n, kb, schema, ctx))
        .collect();
    let mut r = ValidationReport {
        total: lines.len(),
        ..Default::default()
    };
    for o in outcomes {
        match o {
            Outcome::Ok { copyable } => {
                r.parsed += 1;
                r.typechecked += 1;
                r.executed += 1;
                r.copyable += usize::from(copyable);
            }
            Outcome::Failed(f, kind) => {
                if f.stage > Stage::Parse {
                    r.parsed += 1;
                }
                if f.stage > Stage::Typecheck {
                    r.typechecked += 1;
                }
                if let Some(k) = kind {
                    *r.runtime_errors.entry(k.to_string()).or_default() += 1;
                }
                if r.failures.len() < MAX_FAILURES {
                    r.failures.push(f);
                }
            }
        }
    }
    // records that did not execute were not checked for copyable spans
    let checked = r.executed;
    r.parse_pct = pct(r.parsed, r.total);
    r.typecheck_pct = pct(r.typechecked, r.total);
    r.execute_pct = pct(r.executed, r.total);
    r.copyable_pct = pct(r.copyable, checked);
    if r.total == 0 {
        r.warnings.push("dataset is empty; all rates are vacuous".into());
    }
    r
}
