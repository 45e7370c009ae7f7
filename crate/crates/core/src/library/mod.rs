//! The built-in templates, instantiated for a schema.
//!
//! Nonterminals are typed by table and value type so that most ill-typed
//! combinations are never tried:
//!
//! - `np_t`: rows of table `t`
//! - `ent_t`: one named row of `t`
//! - `fname_t`, `fname_t_<type>`, `fname_t_array`: field names of `t`
//! - `value_<type>`: a placeholder
//! - `wf_t`, `vf_t`, `vs_t`, `pf_t`, `af_t`, `if_t`: filters on `t` that
//!   attach after "with", after "that" (plural and singular verb), directly
//!   after the noun, before the noun, and after "that are"
//! - `fref`: a projection, aggregate or computed answer
//! - `question`: the root

pub mod lexicon;
pub mod pronoun;

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{AggOp, CmpOp, SortDir};
use crate::builder::annotate::split_camel;
use crate::schema::{FieldDef, NlSchema, Pos};
use crate::template::{nt, Family, Item, OpRow, SemFn, Template, ROOT};
use crate::types::{Dimension, TypeTag};

use lexicon::{entry, field_kind, LexKind};
pub use pronoun::{pronoun_for, Subject};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LibraryOptions {
    /// Adds "both X and Y" and "at least N" templates.
    pub refinements: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Library {
    pub templates: Vec<Template>,
    pub warnings: Vec<String>,
}

fn lit(s: &str) -> Item {
    Item::Literal(s.to_string())
}

fn var(name: &str, nt: impl Into<String>) -> Item {
    Item::Var {
        name: name.to_string(),
        nt: nt.into(),
    }
}

/// Literal items for a phrase, skipping empty text.
fn words(s: &str) -> Vec<Item> {
    let s = s.trim();
    if s.is_empty() {
        Vec::new()
    } else {
        vec![lit(s)]
    }
}

fn seq(parts: Vec<Vec<Item>>) -> Vec<Item> {
    parts.into_iter().flatten().collect()
}

/// Types that can be asked for with a placeholder.
fn has_placeholder(ty: &TypeTag) -> bool {
    !matches!(
        ty,
        TypeTag::Location | TypeTag::Boolean | TypeTag::Record(_) | TypeTag::Array(_)
    )
}

/// Third-person singular verb to its plural form.
pub fn plural_verb(verb: &str) -> String {
    match verb {
        "has" => return "have".into(),
        "is" => return "are".into(),
        "does" => return "do".into(),
        _ => {}
    }
    if let Some(stem) = verb.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for suffix in ["sses", "shes", "ches", "xes", "zes", "oes"] {
        if verb.ends_with(suffix) {
            return verb[..verb.len() - 2].to_string();
        }
    }
    match verb.strip_suffix('s') {
        Some(stem) if !stem.ends_with('s') => stem.to_string(),
        _ => verb.to_string(),
    }
}

/// Splits "serves # cuisine" into ("serves", "cuisine").
fn split_slot(phrase: &str) -> Option<(String, String)> {
    let spaced = phrase.replace('#', " # ");
    let toks: Vec<&str> = spaced.split_whitespace().collect();
    let at = toks.iter().position(|t| *t == "#")?;
    Some((toks[..at].join(" "), toks[at + 1..].join(" ")))
}

/// Pluralizes the leading verb of a verb phrase.
fn plural_phrase(before: &str) -> String {
    match before.split_once(' ') {
        Some((v, rest)) => format!("{} {rest}", plural_verb(v)),
        None => plural_verb(before),
    }
}

fn base_phrases(name: &str, f: &FieldDef) -> Vec<String> {
    let base = f.annotations.get(Pos::Base);
    if !base.is_empty() {
        return base.to_vec();
    }
    let last = name.rsplit('.').next().unwrap_or(name);
    vec![split_camel(last).join(" ")]
}

struct Builder<'s> {
    schema: &'s NlSchema,
    opts: &'s LibraryOptions,
    out: Vec<Template>,
    warnings: Vec<String>,
    values: BTreeSet<String>,
}

impl<'s> Builder<'s> {
    fn push(&mut self, t: Template) {
        self.out.push(t);
    }

    fn rule(
        &mut self,
        lhs: impl Into<String>,
        rhs: Vec<Item>,
        semfn: SemFn,
        args: &[&str],
        family: Option<Family>,
    ) -> &mut Template {
        let mut t = Template::new(lhs, rhs, semfn, args);
        t.family = family;
        self.out.push(t);
        self.out.last_mut().unwrap()
    }

    fn value_nt(&mut self, ty: &TypeTag) -> String {
        let name = nt::value(ty);
        if self.values.insert(name.clone()) {
            self.push(Template::new(
                name.clone(),
                vec![Item::Slot],
                SemFn::Slot { ty: ty.clone() },
                &[],
            ));
        }
        name
    }

    fn is_named(&self, table: &str) -> bool {
        self.schema
            .field(table, "name")
            .is_some_and(|f| f.ty == TypeTag::String && !f.is_array)
    }

    /// The noun phrase used where a single named row reads best.
    fn entity_nt(&self, table: &str) -> String {
        if self.is_named(table) {
            nt::filter("ent", table)
        } else {
            nt::np(table)
        }
    }

    fn table(&mut self, table: &str) {
        let schema = self.schema;
        let def = &schema.tables[table];
        let np = nt::np(table);
        let person = schema.is_person(table);
        let rel = if person { "who" } else { "that" };
        use Family::*;

        for phrase in schema.table_phrases(table) {
            self.push(Template::new(
                np.clone(),
                vec![lit(&phrase)],
                SemFn::Table { table: table.into() },
                &[],
            ));
        }
        if self.is_named(table) {
            let v = self.value_nt(&TypeTag::EntityRef(table.into()));
            let named = SemFn::Named { table: table.into() };
            self.rule(np.clone(), vec![var("v", &v)], named.clone(), &["v"], None);
            self.rule(nt::filter("ent", table), vec![var("v", &v)], named, &["v"], None);
        }

        let wf = nt::filter("wf", table);
        let vf = nt::filter("vf", table);
        let vs = nt::filter("vs", table);
        let pf = nt::filter("pf", table);
        let af = nt::filter("af", table);
        let isf = nt::filter("if", table);
        let fname = nt::fname(table);

        // field names and canonical comparisons
        let mut typed: BTreeMap<String, (TypeTag, bool)> = BTreeMap::new();
        let mut kinds: BTreeMap<LexKind, Vec<&str>> = BTreeMap::new();
        for (fld, def) in &def.fields {
            let field = SemFn::Field {
                table: table.into(),
                field: fld.clone(),
            };
            for b in base_phrases(fld, def) {
                self.push(Template::new(fname.clone(), vec![lit(&b)], field.clone(), &[]));
                if has_placeholder(&def.ty) || def.ty.is_ordered() {
                    let key = nt::fname_typed(table, &def.ty);
                    self.push(Template::new(key.clone(), vec![lit(&b)], field.clone(), &[]));
                    let e = typed.entry(key).or_insert((def.ty.clone(), false));
                    e.1 |= def.is_array;
                }
                if def.is_array {
                    self.push(Template::new(nt::fname_array(table), vec![lit(&b)], field.clone(), &[]));
                }
            }
            if !def.is_array {
                if let Some(k) = field_kind(&def.ty) {
                    kinds.entry(k).or_default().push(fld);
                }
            }
        }
        for (key, (ty, any_array)) in &typed {
            let f = || var("f", key.clone());
            if has_placeholder(ty) {
                let v = self.value_nt(ty);
                let cmp = |op| SemFn::Cmp { op, negate: false };
                self.rule(
                    wf.clone(),
                    vec![f(), lit("equal to"), var("v", &v)],
                    cmp(CmpOp::Eq),
                    &["f", "v"],
                    Some(CanonicalSelection),
                )
                .op = Some(OpRow::SelectEq);
                if ty.is_ordered() {
                    self.rule(
                        wf.clone(),
                        vec![f(), lit("greater than"), var("v", &v)],
                        cmp(CmpOp::Ge),
                        &["f", "v"],
                        Some(CanonicalSelection),
                    )
                    .op = Some(OpRow::SelectGe);
                    self.rule(
                        wf.clone(),
                        vec![f(), lit("less than"), var("v", &v)],
                        cmp(CmpOp::Le),
                        &["f", "v"],
                        Some(CanonicalSelection),
                    )
                    .op = Some(OpRow::SelectLe);
                }
                if *ty == TypeTag::String || *any_array {
                    self.rule(
                        wf.clone(),
                        vec![f(), lit("containing"), var("v", &v)],
                        cmp(CmpOp::Contains),
                        &["f", "v"],
                        Some(CanonicalSelection),
                    )
                    .op = Some(OpRow::SelectContains);
                }
                self.rule(
                    wf.clone(),
                    vec![f(), lit("not equal to"), var("v", &v)],
                    SemFn::Cmp {
                        op: CmpOp::Eq,
                        negate: true,
                    },
                    &["f", "v"],
                    Some(Connective),
                );
            }
            if ty.is_ordered() {
                let n = || var("n", np.clone());
                self.rule(
                    np.clone(),
                    vec![lit("the"), n(), lit("with the min"), f()],
                    SemFn::Rank { dir: SortDir::Asc },
                    &["n", "f"],
                    Some(CanonicalRanking),
                )
                .op = Some(OpRow::RankMin);
                self.rule(
                    np.clone(),
                    vec![lit("the"), n(), lit("with the max"), f()],
                    SemFn::Rank { dir: SortDir::Desc },
                    &["n", "f"],
                    Some(CanonicalRanking),
                )
                .op = Some(OpRow::RankMax);
                let c = self.value_nt(&TypeTag::Number);
                self.rule(
                    np.clone(),
                    vec![lit("the"), var("c", &c), n(), lit("with the min"), f()],
                    SemFn::RankN { dir: SortDir::Asc },
                    &["c", "n", "f"],
                    Some(CanonicalRanking),
                )
                .op = Some(OpRow::RankMinN);
                self.rule(
                    np.clone(),
                    vec![lit("the"), var("c", &c), n(), lit("with the max"), f()],
                    SemFn::RankN { dir: SortDir::Desc },
                    &["c", "n", "f"],
                    Some(CanonicalRanking),
                )
                .op = Some(OpRow::RankMaxN);
                let mut ops = vec![("minimum", AggOp::Min), ("maximum", AggOp::Max)];
                if ty.is_numeric() {
                    ops.extend([("average", AggOp::Avg), ("total", AggOp::Sum)]);
                }
                for (word, op) in ops {
                    self.rule(
                        nt::ANSWER,
                        vec![lit(&format!("the {word}")), f(), lit("of"), n()],
                        SemFn::Agg { op },
                        &["f", "n"],
                        Some(CanonicalAggregation),
                    )
                    .op = Some(OpRow::AggregateOp);
                }
            }
        }

        // attaching filters to noun phrases
        let n = || var("n", np.clone());
        self.rule(
            np.clone(),
            vec![n(), lit("with"), var("f", &wf)],
            SemFn::Select,
            &["n", "f"],
            Some(CanonicalSelection),
        );
        self.rule(
            np.clone(),
            vec![n(), lit(rel), var("f", &vf)],
            SemFn::Select,
            &["n", "f"],
            Some(PosStructure),
        );
        self.rule(
            np.clone(),
            vec![n(), var("f", &pf)],
            SemFn::Select,
            &["n", "f"],
            Some(PosStructure),
        );
        self.rule(
            np.clone(),
            vec![n(), lit(&format!("{rel} are")), var("f", &isf)],
            SemFn::Select,
            &["n", "f"],
            Some(PosStructure),
        );
        self.rule(
            np.clone(),
            vec![var("a", &af), n()],
            SemFn::Select,
            &["n", "a"],
            Some(Connective),
        );
        for (f_nt, word, semfn) in [
            (&wf, "and", SemFn::And),
            (&wf, "or", SemFn::Or),
            (&vf, "and", SemFn::And),
            (&vs, "and", SemFn::And),
        ] {
            self.rule(
                f_nt.clone(),
                vec![var("a", f_nt), lit(word), var("b", f_nt)],
                semfn,
                &["a", "b"],
                Some(Connective),
            );
        }

        // annotations by part of speech
        for (fld, def) in &def.fields {
            self.field_phrases(table, fld, def);
        }

        // comparatives and superlatives on stored quantities
        for (kind, fields) in &kinds {
            let lex = entry(*kind);
            let unique = fields.len() == 1 && kind.describes_holder();
            for fld in fields {
                let def = &def.fields[*fld];
                let v = self.value_nt(&def.ty);
                let base = base_phrases(fld, def)[0].clone();
                for (phrase, dir) in lex.comparatives {
                    let semfn = SemFn::FieldCmp {
                        table: table.into(),
                        field: fld.to_string(),
                        op: dir.comparison(),
                        negate: false,
                    };
                    self.rule(
                        wf.clone(),
                        vec![lit(&format!("{base} {phrase}")), var("v", &v)],
                        semfn.clone(),
                        &["v"],
                        Some(Comparative),
                    );
                    if unique {
                        self.rule(
                            pf.clone(),
                            vec![lit(phrase), var("v", &v)],
                            semfn,
                            &["v"],
                            Some(Comparative),
                        );
                    }
                }
                for (word, dir) in lex.superlatives {
                    let semfn = SemFn::Superlative {
                        field: fld.to_string(),
                        dir: *dir,
                    };
                    self.rule(
                        np.clone(),
                        vec![lit("the"), n(), lit(&format!("with the {word} {base}"))],
                        semfn.clone(),
                        &["n"],
                        Some(Superlative),
                    );
                    if unique {
                        self.rule(
                            np.clone(),
                            vec![lit(&format!("the {word}")), n()],
                            semfn,
                            &["n"],
                            Some(Superlative),
                        );
                    }
                }
            }
        }

        // distance from the user
        let geo: Vec<&String> = def
            .fields
            .iter()
            .filter(|(_, d)| d.ty == TypeTag::Location && !d.is_array)
            .map(|(k, _)| k)
            .collect();
        for g in geo {
            let lex = entry(LexKind::Distance);
            for (word, dir) in lex.superlatives {
                self.rule(
                    np.clone(),
                    vec![lit(&format!("the {word}")), n()],
                    SemFn::Nearest {
                        field: g.clone(),
                        dir: *dir,
                    },
                    &["n"],
                    Some(ShortenedDistance),
                );
            }
            let d = self.value_nt(&TypeTag::Measure(Dimension::Distance));
            for (phrase, dir) in lex.comparatives {
                self.rule(
                    np.clone(),
                    vec![n(), lit(phrase), var("v", &d)],
                    SemFn::Within {
                        field: g.clone(),
                        op: dir.comparison(),
                    },
                    &["n", "v"],
                    Some(Comparative),
                );
            }
            self.rule(
                np.clone(),
                vec![n(), lit("within"), var("v", &d)],
                SemFn::Within {
                    field: g.clone(),
                    op: CmpOp::Le,
                },
                &["n", "v"],
                Some(ShortenedDistance),
            );
            self.rule(
                ROOT,
                vec![lit("how far is"), n()],
                SemFn::HowFar { field: g.clone() },
                &["n"],
                Some(ShortenedDistance),
            );
            self.rule(
                ROOT,
                vec![lit("where is"), n()],
                SemFn::ProjectField { field: g.clone() },
                &["n"],
                Some(InterrogativePronoun),
            );
            self.rule(
                nt::ANSWER,
                vec![lit("the distance of"), n(), lit("from"), var("l", nt::LOCATION)],
                SemFn::DistanceFrom { field: g.clone() },
                &["n", "l"],
                Some(CanonicalRowwise),
            )
            .op = Some(OpRow::RowDistance);
            if !self.values.contains(nt::LOCATION) {
                self.values.insert(nt::LOCATION.into());
                self.push(Template::new(nt::LOCATION, vec![lit("here")], SemFn::Here, &[]));
            }
        }

        // projection, aggregation, row-wise answers
        self.rule(
            nt::ANSWER,
            vec![lit("the"), var("f", &fname), lit("of"), n()],
            SemFn::Project,
            &["f", "n"],
            Some(CanonicalProjection),
        )
        .op = Some(OpRow::Projection);
        self.rule(
            nt::ANSWER,
            vec![lit("the number of"), n()],
            SemFn::Count,
            &["n"],
            Some(CanonicalAggregation),
        )
        .op = Some(OpRow::AggregateCount);
        self.rule(
            ROOT,
            vec![lit("how many"), n(), lit("are there")],
            SemFn::Count,
            &["n"],
            Some(InterrogativePronoun),
        );
        self.rule(
            nt::ANSWER,
            vec![lit("the number of"), var("f", nt::fname_array(table)), lit("in"), n()],
            SemFn::ArrayCount,
            &["f", "n"],
            Some(CanonicalRowwise),
        )
        .op = Some(OpRow::RowCount);
        for (fld, def) in &def.fields {
            let pron = pronoun_for(Subject::Type(&def.ty), schema);
            if pron == "what" || def.ty == TypeTag::Location {
                continue;
            }
            let base = base_phrases(fld, def)[0].clone();
            self.rule(
                ROOT,
                vec![lit(&format!("{pron} is the {base} of")), n()],
                SemFn::ProjectField { field: fld.clone() },
                &["n"],
                Some(InterrogativePronoun),
            );
        }

        // sentence types
        for opener in ["search for", "show me", "find", "i am looking for", "what are"] {
            self.rule(
                ROOT,
                vec![lit(opener), n()],
                SemFn::Identity,
                &["n"],
                Some(SentenceType),
            );
        }
        self.rule(ROOT, vec![n()], SemFn::Identity, &["n"], Some(SentenceType));

        // questions that put the filter after an interrogative
        let sel_table = SemFn::SelectTable { table: table.into() };
        if person {
            self.rule(
                ROOT,
                vec![lit("who"), var("f", &vs)],
                sel_table.clone(),
                &["f"],
                Some(InterrogativePronoun),
            );
            self.rule(
                ROOT,
                vec![lit("who is"), var("f", &pf)],
                sel_table.clone(),
                &["f"],
                Some(InterrogativePronoun),
            );
            self.rule(
                ROOT,
                vec![lit("who is"), var("f", &isf)],
                sel_table.clone(),
                &["f"],
                Some(InterrogativePronoun),
            );
            self.rule(
                ROOT,
                vec![lit("who has"), var("f", &wf)],
                sel_table,
                &["f"],
                Some(InterrogativePronoun),
            );
        }
        self.rule(
            ROOT,
            vec![lit("which"), n(), var("f", &vf)],
            SemFn::Select,
            &["n", "f"],
            Some(PosStructure),
        );
        self.rule(
            ROOT,
            vec![lit("which"), n(), lit("are"), var("f", &pf)],
            SemFn::Select,
            &["n", "f"],
            Some(PosStructure),
        );
        self.rule(
            ROOT,
            vec![lit("which"), n(), lit("are"), var("f", &isf)],
            SemFn::Select,
            &["n", "f"],
            Some(PosStructure),
        );
        self.rule(
            ROOT,
            vec![lit("which"), n(), lit("have"), var("f", &wf)],
            SemFn::Select,
            &["n", "f"],
            Some(PosStructure),
        );
    }

    fn field_phrases(&mut self, table: &str, fld: &str, def: &FieldDef) {
        use Family::*;
        let schema = self.schema;
        let ent = self.entity_nt(table);
        let usable = has_placeholder(&def.ty);
        let mut any = false;
        let fcmp = SemFn::FieldCmp {
            table: table.into(),
            field: fld.into(),
            op: CmpOp::Eq,
            negate: false,
        };
        let project = SemFn::ProjectField { field: fld.into() };
        let pron = pronoun_for(Subject::Type(&def.ty), schema);
        for (pos, phrase) in def.annotations.iter() {
            if pos == Pos::Base {
                continue;
            }
            let Some((before, after)) = split_slot(phrase) else {
                continue;
            };
            if !usable {
                continue;
            }
            any = true;
            let v = self.value_nt(&def.ty);
            let filler = |b: &str| seq(vec![words(b), vec![var("v", &v)], words(&after)]);
            let lhs = match pos {
                Pos::HasANoun => "wf",
                Pos::IsANoun => "if",
                Pos::ActiveVerb => "vs",
                Pos::PassiveVerb | Pos::Preposition => "pf",
                Pos::Adjective => "af",
                Pos::Base => unreachable!(),
            };
            self.rule(
                nt::filter(lhs, table),
                filler(&before),
                fcmp.clone(),
                &["v"],
                Some(PosStructure),
            )
            .pos = Some(pos);
            if pos == Pos::ActiveVerb && !before.is_empty() {
                let plural = plural_phrase(&before);
                self.rule(
                    nt::filter("vf", table),
                    filler(&plural),
                    fcmp.clone(),
                    &["v"],
                    Some(PosStructure),
                )
                .pos = Some(pos);
                if self.opts.refinements && def.is_array {
                    let both = SemFn::Both {
                        table: table.into(),
                        field: fld.into(),
                    };
                    for (lhs, verb) in [("vs", before.clone()), ("vf", plural.clone())] {
                        let rhs = seq(vec![
                            words(&format!("{verb} both")),
                            vec![var("a", &v), lit("and"), var("b", &v)],
                            words(&after),
                        ]);
                        self.rule(nt::filter(lhs, table), rhs, both.clone(), &["a", "b"], Some(Connective))
                            .pos = Some(pos);
                    }
                }
            }

            // asking for the field's value of a given row
            let e = || var("n", ent.clone());
            let (verb, rest) = before.split_once(' ').unwrap_or((before.as_str(), ""));
            let rhs = match pos {
                Pos::ActiveVerb if !before.is_empty() => {
                    let head = if after.is_empty() {
                        pron.to_string()
                    } else {
                        format!("what {after}")
                    };
                    Some(seq(vec![
                        words(&format!("{head} does")),
                        vec![e()],
                        words(&format!("{} {rest}", plural_verb(verb))),
                    ]))
                }
                Pos::HasANoun if before.is_empty() && !after.is_empty() => {
                    Some(vec![lit(&format!("what {after} does")), e(), lit("have")])
                }
                Pos::PassiveVerb | Pos::IsANoun | Pos::Preposition if !before.is_empty() && after.is_empty() => {
                    Some(vec![lit(&format!("{pron} is")), e(), lit(&before)])
                }
                _ => None,
            };
            if let Some(rhs) = rhs {
                self.rule(ROOT, rhs, project.clone(), &["n"], Some(PosStructure)).pos = Some(pos);
            }
        }
        if usable && !any {
            self.warnings.push(format!(
                "{table}.{fld}: no annotations usable for {}",
                PosStructure.name()
            ));
        }

        // the inverse relation, for links to other tables
        let TypeTag::EntityRef(target) = &def.ty else { return };
        if target == table {
            return;
        }
        let target_np = nt::np(target);
        let rel = if schema.is_person(target) { "who" } else { "that" };
        for pos in Pos::ALL {
            for phrase in def.annotations.get_reverse(pos) {
                let Some((before, after)) = split_slot(phrase) else {
                    continue;
                };
                if !self.is_named(table) {
                    continue;
                }
                let v = self.value_nt(&TypeTag::EntityRef(table.into()));
                let rev = SemFn::Reverse {
                    table: table.into(),
                    field: fld.into(),
                };
                let n = || var("n", target_np.clone());
                let tail = |b: &str| seq(vec![words(b), vec![var("v", &v)], words(&after)]);
                let rhs = match pos {
                    Pos::ActiveVerb => seq(vec![vec![n(), lit(rel)], tail(&plural_phrase(&before))]),
                    Pos::HasANoun => seq(vec![vec![n(), lit("with")], tail(&before)]),
                    Pos::IsANoun => seq(vec![vec![n(), lit(&format!("{rel} are"))], tail(&before)]),
                    Pos::PassiveVerb | Pos::Preposition => seq(vec![vec![n()], tail(&before)]),
                    Pos::Adjective | Pos::Base => continue,
                };
                self.rule(target_np.clone(), rhs, rev.clone(), &["n", "v"], Some(PosStructure))
                    .pos = Some(pos);
                if pos == Pos::ActiveVerb {
                    let rhs = seq(vec![vec![lit("which"), n()], tail(&plural_phrase(&before))]);
                    self.rule(ROOT, rhs, rev, &["n", "v"], Some(PosStructure)).pos = Some(pos);
                }
            }
        }
    }

    fn links(&mut self) {
        use Family::*;
        let schema = self.schema;
        for (table, def) in &schema.tables {
            for (fld, f) in &def.fields {
                let TypeTag::EntityRef(target) = &f.ty else { continue };
                if target == table {
                    continue;
                }
                let (a_np, b_np) = (nt::np(target), nt::np(table));
                // "the reviews of the restaurant": rows of the target linked from the holder
                self.rule(
                    a_np.clone(),
                    vec![lit("the"), var("a", &a_np), lit("of"), var("b", &b_np)],
                    SemFn::Join { link: fld.clone() },
                    &["a", "b"],
                    Some(CanonicalJoin),
                )
                .op = Some(OpRow::Join);
                // "restaurants with reviews": holders linking to some target row
                self.rule(
                    b_np.clone(),
                    vec![var("a", &b_np), lit("with"), var("b", &a_np)],
                    SemFn::Exists {
                        link: fld.clone(),
                        negate: false,
                    },
                    &["a", "b"],
                    Some(CanonicalQuantifier),
                )
                .op = Some(OpRow::Exists);
                self.rule(
                    b_np.clone(),
                    vec![var("a", &b_np), lit("with no"), var("b", &a_np)],
                    SemFn::Exists {
                        link: fld.clone(),
                        negate: true,
                    },
                    &["a", "b"],
                    Some(CanonicalQuantifier),
                )
                .op = Some(OpRow::NotExists);
                if self.opts.refinements && f.is_array {
                    let c = self.value_nt(&TypeTag::Number);
                    let base = base_phrases(fld, f)[0].clone();
                    self.rule(
                        b_np.clone(),
                        vec![var("n", &b_np), lit("with at least"), var("c", &c), lit(&base)],
                        SemFn::AtLeast { field: fld.clone() },
                        &["n", "c"],
                        Some(Comparative),
                    );
                }
            }
        }
    }
}

/// Drops templates that mention a nonterminal nothing produces, until none do.
fn prune(mut templates: Vec<Template>) -> Vec<Template> {
    loop {
        let produced: BTreeSet<&str> = templates.iter().map(|t| t.lhs.as_str()).collect();
        let keep: Vec<bool> = templates
            .iter()
            .map(|t| t.vars().all(|(_, nt)| produced.contains(nt)))
            .collect();
        if keep.iter().all(|k| *k) {
            return templates;
        }
        let mut it = keep.into_iter();
        templates.retain(|_| it.next().unwrap());
    }
}

/// Instantiates the built-in templates for every table and field of `schema`.
pub fn builtin_templates(schema: &NlSchema, opts: &LibraryOptions) -> Library {
    let mut b = Builder {
        schema,
        opts,
        out: Vec::new(),
        warnings: Vec::new(),
        values: BTreeSet::new(),
    };
    // positions in ranked lists are always asked for with a number
    b.value_nt(&TypeTag::Number);
    for table in schema.tables.keys() {
        b.table(table);
    }
    b.links();
    for opener in ["what is", "show me", "tell me"] {
        b.rule(
            ROOT,
            vec![lit(opener), var("r", nt::ANSWER)],
            SemFn::Identity,
            &["r"],
            Some(Family::SentenceType),
        );
    }
    b.rule(
        ROOT,
        vec![var("r", nt::ANSWER)],
        SemFn::Identity,
        &["r"],
        Some(Family::SentenceType),
    );
    Library {
        templates: prune(b.out),
        warnings: b.warnings,
    }
}
