//! Replaces the typed placeholders of synthesized pairs with concrete values.

use std::collections::{BTreeMap, HashSet};

use chrono::{Duration, NaiveTime, Timelike};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ast::CmpOp;
use crate::dataset::DatasetRecord;
use crate::kb::KnowledgeBase;
use crate::schema::NlSchema;
use crate::syntax::{parse, tokens};
use crate::template::{placeholder_index, Derivation};
use crate::typecheck::{typecheck_with_slots, SlotInfo, SlotRole};
use crate::types::{Dimension, TypeTag};
use crate::value::{format_date, format_number, format_time, units, Value};

/// Thresholds offered for distances computed from the user's position.
const DISTANCES_M: &[f64] = &[500.0, 1000.0, 2000.0, 5000.0, 10000.0, 20000.0, 50000.0];
/// Row counts offered for `[1 : n]` and `count >= n`.
const SMALL_COUNTS: std::ops::RangeInclusive<u32> = 2..=5;

/// Observed values per (table, field), array cells flattened.
#[derive(Debug, Clone, Default)]
pub struct ValuePool {
    values: BTreeMap<(String, String), Vec<Value>>,
    /// Names that `lookup` resolves to exactly one row.
    names: BTreeMap<String, Vec<String>>,
}

impl ValuePool {
    pub fn from_kb(kb: &KnowledgeBase, schema: &NlSchema) -> ValuePool {
        let mut pool = ValuePool::default();
        for (table, def) in &schema.tables {
            let rows = kb.rows(table);
            for field in def.fields.keys() {
                let mut seen = Vec::new();
                for row in rows {
                    let cells: Vec<&Value> = match row.get(field) {
                        Some(Value::Array(items)) => items.iter().collect(),
                        Some(v) => vec![v],
                        None => continue,
                    };
                    for c in cells {
                        if !seen.contains(c) {
                            seen.push(c.clone());
                        }
                    }
                }
                if !seen.is_empty() {
                    pool.values.insert((table.clone(), field.clone()), seen);
                }
            }
            let mut names: Vec<String> = rows
                .iter()
                .filter_map(|r| r.name().map(str::to_string))
                .filter(|n| !n.is_empty() && kb.resolve_lookup(n, table).is_ok())
                .collect();
            names.sort();
            names.dedup();
            if !names.is_empty() {
                pool.names.insert(table.clone(), names);
            }
        }
        pool
    }

    pub fn values(&self, table: &str, field: &str) -> &[Value] {
        self.values
            .get(&(table.to_string(), field.to_string()))
            .map_or(&[], Vec::as_slice)
    }

    pub fn names(&self, table: &str) -> &[String] {
        self.names.get(table).map_or(&[], Vec::as_slice)
    }

    /// Draws a value for one placeholder, or `None` when nothing fits.
    pub fn sample(&self, slot: &SlotInfo, rng: &mut impl Rng) -> Option<Value> {
        if slot.role == SlotRole::Position {
            return Some(Value::Number(rng.gen_range(SMALL_COUNTS) as f64));
        }
        if slot.role == SlotRole::LookupName {
            let table = &slot.origin.as_ref()?.0;
            return self.names(table).choose(rng).map(|n| Value::String(n.clone()));
        }
        let SlotRole::Compare(op) = slot.role else {
            return None;
        };
        let Some((table, field)) = &slot.origin else {
            // computed columns: distance from the user, element counts
            return match slot.ty {
                TypeTag::Measure(Dimension::Distance) => {
                    DISTANCES_M.choose(rng).map(|d| Value::Measure(*d, Dimension::Distance))
                }
                TypeTag::Number => Some(Value::Number(rng.gen_range(SMALL_COUNTS) as f64)),
                _ => None,
            };
        };
        let observed = self.values(table, field);
        if observed.is_empty() {
            return None;
        }
        match (&slot.ty, op) {
            (TypeTag::String, CmpOp::Substr) => {
                let Value::String(s) = observed.choose(rng)? else {
                    return None;
                };
                let words: Vec<&str> = s.split_whitespace().collect();
                let long: Vec<&str> = words.iter().copied().filter(|w| w.len() >= 3).collect();
                let pick = long.choose(rng).or_else(|| words.choose(rng))?;
                Some(Value::String(pick.to_string()))
            }
            (ty, CmpOp::Ge | CmpOp::Le) if ty.is_ordered() => within_range(observed, rng),
            (TypeTag::Boolean, _) => Some(Value::Boolean(rng.gen())),
            (TypeTag::Location | TypeTag::EntityRef(_) | TypeTag::Record(_), _) => None,
            _ => observed.choose(rng).cloned(),
        }
    }
}

/// A value between the smallest and largest observed ones, rounded to the
/// precision the data uses.
fn within_range(observed: &[Value], rng: &mut impl Rng) -> Option<Value> {
    match observed.first()? {
        Value::Number(_) | Value::Measure(..) => {
            let nums: Vec<f64> = observed
                .iter()
                .filter_map(|v| match v {
                    Value::Number(x) | Value::Measure(x, _) => Some(*x),
                    _ => None,
                })
                .collect();
            let lo = nums.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = nums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let step = if nums.iter().all(|x| x.fract() == 0.0) {
                if lo >= 1000.0 && nums.iter().all(|x| x % 100.0 == 0.0) {
                    100.0
                } else {
                    1.0
                }
            } else {
                0.1
            };
            let x = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let x = ((x / step).round() * step).clamp(lo, hi);
            // rounding to a tenth leaves binary noise
            let x = (x * 10.0).round() / 10.0;
            Some(match observed[0] {
                Value::Measure(_, d) => Value::Measure(x, d),
                _ => Value::Number(x),
            })
        }
        Value::Date(_) => {
            let dates: Vec<_> = observed
                .iter()
                .filter_map(|v| if let Value::Date(d) = v { Some(*d) } else { None })
                .collect();
            let lo = *dates.iter().min()?;
            let hi = *dates.iter().max()?;
            let days = (hi - lo).num_days();
            let d = lo.date() + Duration::days(rng.gen_range(0..=days));
            Some(Value::Date(d.and_time(NaiveTime::MIN)))
        }
        Value::Time(_) => {
            let mins: Vec<u32> = observed
                .iter()
                .filter_map(|v| {
                    if let Value::Time(t) = v {
                        Some(t.hour() * 60 + t.minute())
                    } else {
                        None
                    }
                })
                .collect();
            let lo = *mins.iter().min()? / 30;
            let hi = *mins.iter().max()? / 30;
            let m = rng.gen_range(lo..=hi) * 30;
            NaiveTime::from_hms_opt(m / 60, m % 60, 0).map(Value::Time)
        }
        _ => observed.choose(rng).cloned(),
    }
}

/// How a value is said in a sentence.
pub fn surface(v: &Value) -> Vec<String> {
    let words = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    match v {
        Value::String(s) => words(s),
        Value::Enum(m) => words(&m.replace('_', " ")),
        Value::Number(x) => vec![format_number(*x)],
        Value::Measure(x, Dimension::Distance) if *x >= 1000.0 => {
            vec![format_number(x / 1000.0), "km".into()]
        }
        Value::Measure(x, Dimension::Currency) => vec![format_number(*x), "dollars".into()],
        Value::Measure(x, d) => vec![format_number(*x), units::base_unit(*d).to_string()],
        Value::Date(d) => vec![format_date(d)],
        Value::Time(t) => vec![format_time(t)],
        Value::Boolean(b) => vec![b.to_string()],
        other => tokens_of_value(other),
    }
}

fn tokens_of_value(v: &Value) -> Vec<String> {
    crate::syntax::print_value(v)
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Placeholder-form records for a list of derivations, ids in list order.
pub fn synthesized_records(derivations: &[Derivation]) -> Vec<DatasetRecord> {
    derivations
        .iter()
        .enumerate()
        .map(|(i, d)| DatasetRecord {
            id: crate::dataset::synthesized_id(i),
            sentence: d.sentence.clone(),
            code: d.code().split_whitespace().map(str::to_string).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct Augmented {
    pub records: Vec<DatasetRecord>,
    /// Index of the input pair each record was made from.
    pub sources: Vec<usize>,
    pub warnings: Vec<String>,
    pub dropped: usize,
}

/// Instantiates every placeholder pair up to `multiplier` times with
/// independently sampled values. Pairs without placeholders are copied once.
/// Output keeps input order and holds no duplicate (sentence, code) pair.
pub fn augment(
    pairs: &[DatasetRecord],
    kb: &KnowledgeBase,
    schema: &NlSchema,
    multiplier: u32,
    seed: u64,
) -> Augmented {
    let pool = ValuePool::from_kb(kb, schema);
    augment_with_pool(pairs, &pool, schema, multiplier, seed)
}

pub fn augment_with_pool(
    pairs: &[DatasetRecord],
    pool: &ValuePool,
    schema: &NlSchema,
    multiplier: u32,
    seed: u64,
) -> Augmented {
    let per_pair: Vec<Result<Vec<DatasetRecord>, String>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, pair)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            instantiate(pair, pool, schema, multiplier, &mut rng)
        })
        .collect();
    let mut out = Augmented::default();
    let mut seen = HashSet::new();
    for (i, r) in per_pair.into_iter().enumerate() {
        match r {
            Ok(recs) => {
                for rec in recs {
                    if seen.insert((rec.sentence.clone(), rec.code.clone())) {
                        out.records.push(rec);
                        out.sources.push(i);
                    }
                }
            }
            Err(w) => {
                out.dropped += 1;
                out.warnings.push(format!("{}: {w}", pairs[i].id));
            }
        }
    }
    out
}

/// Draw attempts per record when values of one pair collide.
const RETRIES: usize = 8;

fn instantiate(
    pair: &DatasetRecord,
    pool: &ValuePool,
    schema: &NlSchema,
    multiplier: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DatasetRecord>, String> {
    let query = parse(&pair.code_text()).map_err(|e| e.to_string())?;
    let typed = typecheck_with_slots(&query, schema).map_err(|e| e.to_string())?;
    if typed.slots.is_empty() {
        return Ok(vec![DatasetRecord {
            id: format!("{}-0", pair.id),
            ..pair.clone()
        }]);
    }
    let mut out = Vec::new();
    for k in 0..multiplier {
        let mut values: BTreeMap<u32, Value> = BTreeMap::new();
        for slot in &typed.slots {
            let mut v = None;
            for _ in 0..RETRIES {
                let cand = pool
                    .sample(slot, rng)
                    .ok_or_else(|| format!("no values for VALUE_{} ({})", slot.id, slot.ty))?;
                let clash = values.values().any(|u| surface(u) == surface(&cand));
                v = Some(cand);
                if !clash {
                    break;
                }
            }
            values.insert(slot.id, v.expect("at least one draw"));
        }
        let mut q = query.clone();
        q.map_placeholders(&mut |id| values.get(&id).cloned().unwrap_or(Value::Placeholder(id)));
        let mut sentence = Vec::new();
        for tok in &pair.sentence {
            match placeholder_index(tok).and_then(|id| values.get(&id)) {
                Some(v) => sentence.extend(surface(v)),
                None => sentence.push(tok.clone()),
            }
        }
        out.push(DatasetRecord {
            id: format!("{}-{k}", pair.id),
            sentence,
            code: tokens(&q),
        });
    }
    Ok(out)
}
