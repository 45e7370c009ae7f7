use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::ConfigError;
use crate::schema::NlSchema;

use super::{apply_semfn, Derivation, Template, ROOT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionConfig {
    pub max_depth: u32,
    /// Most derivations kept per (template, depth) stratum.
    pub target_size: usize,
    pub seed: u64,
    /// When set, templates mentioning any other nonterminal are dropped.
    pub enabled: Option<BTreeSet<String>>,
    /// Try every combination instead of sampling.
    pub exhaustive: bool,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            max_depth: 6,
            target_size: 100,
            seed: 0,
            enabled: None,
            exhaustive: false,
        }
    }
}

impl ExpansionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_depth < 1 {
            return Err(ConfigError::Invalid("max_depth must be at least 1".into()));
        }
        if self.target_size == 0 {
            return Err(ConfigError::Invalid("target_size must be positive".into()));
        }
        Ok(())
    }
}

/// Every nonterminal a template list mentions.
pub fn nonterminals(templates: &[Template]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in templates {
        out.insert(t.lhs.clone());
        out.extend(t.vars().map(|(_, nt)| nt.to_string()));
    }
    out
}

// Draw this many combinations per kept derivation before giving up on a
// stratum whose combinations are mostly rejected.
const ATTEMPTS_PER_TARGET: u128 = 8;

/// Expands `templates` bottom-up and returns the derivations of the root
/// nonterminal, deduplicated by sentence and sorted by sentence.
pub fn expand(
    templates: &[Template],
    schema: &NlSchema,
    cfg: &ExpansionConfig,
) -> Result<Vec<Derivation>, ConfigError> {
    cfg.validate()?;
    let produced: HashSet<&str> = templates.iter().map(|t| t.lhs.as_str()).collect();
    for t in templates {
        if let Err(message) = t.check() {
            return Err(ConfigError::Invalid(format!("{t}: {message}")));
        }
        for (_, nt) in t.vars() {
            if !produced.contains(nt) {
                return Err(ConfigError::UnknownNonterminal {
                    template: t.to_string(),
                    nonterminal: nt.to_string(),
                });
            }
        }
    }
    if !produced.contains(ROOT) {
        return Err(ConfigError::MissingRoot(ROOT.into()));
    }

    let active: Vec<(u32, &Template)> = templates
        .iter()
        .enumerate()
        .filter(|(_, t)| match &cfg.enabled {
            None => true,
            Some(set) => set.contains(&t.lhs) && t.vars().all(|(_, nt)| set.contains(nt)),
        })
        .map(|(i, t)| (i as u32, t))
        .collect();

    let mut pools: HashMap<String, Pool> = HashMap::new();
    for d in 0..=cfg.max_depth {
        let produced: Vec<Vec<Derivation>> = active
            .par_iter()
            .map(|(id, t)| stratum(*id, t, d, &pools, schema, cfg))
            .collect();
        let mut fresh: HashMap<&str, HashMap<String, Derivation>> = HashMap::new();
        for ((_, t), ders) in active.iter().zip(produced) {
            let pool = pools.get(&t.lhs);
            let slot = fresh.entry(t.lhs.as_str()).or_default();
            for der in ders {
                let key = der.sentence_text();
                if pool.is_some_and(|p| p.seen.contains(&key)) {
                    continue;
                }
                match slot.get(&key) {
                    Some(prev) if prev.code() <= der.code() => {}
                    _ => {
                        slot.insert(key, der);
                    }
                }
            }
        }
        for (nt, ders) in fresh {
            let pool = pools.entry(nt.to_string()).or_default();
            let mut ders: Vec<(String, Derivation)> = ders.into_iter().collect();
            ders.sort_by(|a, b| a.0.cmp(&b.0));
            pool.by_depth.resize_with(d as usize + 1, Vec::new);
            for (key, der) in ders {
                pool.seen.insert(key);
                pool.by_depth[d as usize].push(der);
            }
        }
    }

    let mut out: Vec<Derivation> = pools
        .remove(ROOT)
        .map(|p| p.by_depth.into_iter().flatten().collect())
        .unwrap_or_default();
    out.sort_by_cached_key(Derivation::sentence_text);
    Ok(out)
}

#[derive(Default)]
struct Pool {
    by_depth: Vec<Vec<Derivation>>,
    seen: HashSet<String>,
}

/// Candidate children of one variable at depth `d`: everything below `d`,
/// of which the first `low` are below `d - 1`.
struct Column<'a> {
    items: Vec<&'a Derivation>,
    low: usize,
}

impl Column<'_> {
    fn top(&self) -> usize {
        self.items.len() - self.low
    }
}

/// Combinations with at least one child of depth `d - 1`, enumerated in
/// blocks by the first variable that has one.
struct Combos<'a> {
    cols: Vec<Column<'a>>,
    blocks: Vec<u128>,
}

impl<'a> Combos<'a> {
    fn new(cols: Vec<Column<'a>>) -> Self {
        let k = cols.len();
        let blocks = (0..k)
            .map(|i| {
                let mut n = cols[i].top() as u128;
                for (j, c) in cols.iter().enumerate() {
                    if j < i {
                        n = n.saturating_mul(c.low as u128);
                    } else if j > i {
                        n = n.saturating_mul(c.items.len() as u128);
                    }
                }
                n
            })
            .collect();
        Self { cols, blocks }
    }

    fn total(&self) -> u128 {
        self.blocks.iter().fold(0u128, |a, b| a.saturating_add(*b))
    }

    fn decode(&self, mut idx: u128) -> Vec<&'a Derivation> {
        let mut block = 0;
        while idx >= self.blocks[block] {
            idx -= self.blocks[block];
            block += 1;
        }
        let mut out = vec![None; self.cols.len()];
        for (j, c) in self.cols.iter().enumerate().rev() {
            let (base, start) = match j.cmp(&block) {
                std::cmp::Ordering::Less => (c.low, 0),
                std::cmp::Ordering::Equal => (c.top(), c.low),
                std::cmp::Ordering::Greater => (c.items.len(), 0),
            };
            let r = (idx % base as u128) as usize;
            idx /= base as u128;
            out[j] = Some(c.items[start + r]);
        }
        out.into_iter().map(Option::unwrap).collect()
    }
}

fn stratum_rng(seed: u64, id: u32, depth: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((id as u64) << 16) | depth as u64);
    rng
}

fn stratum(
    id: u32,
    t: &Template,
    d: u32,
    pools: &HashMap<String, Pool>,
    schema: &NlSchema,
    cfg: &ExpansionConfig,
) -> Vec<Derivation> {
    if t.is_lexical() {
        return if d == 0 {
            apply_semfn(t, id, &[], schema).into_iter().collect()
        } else {
            Vec::new()
        };
    }
    if d == 0 {
        return Vec::new();
    }
    let mut cols = Vec::new();
    for (_, nt) in t.vars() {
        let Some(pool) = pools.get(nt) else { return Vec::new() };
        let below = (d as usize).min(pool.by_depth.len());
        let low: usize = pool.by_depth[..below.min(d as usize - 1)].iter().map(Vec::len).sum();
        let items: Vec<&Derivation> = pool.by_depth[..below].iter().flatten().collect();
        cols.push(Column { items, low });
    }
    let combos = Combos::new(cols);
    let total = combos.total();
    if total == 0 {
        return Vec::new();
    }
    let target = cfg.target_size;
    let mut rng = stratum_rng(cfg.seed, id, d);
    let attempt = |idx: u128| apply_semfn(t, id, &combos.decode(idx), schema);

    if cfg.exhaustive {
        return (0..total).filter_map(attempt).collect();
    }
    let budget = (target as u128).saturating_mul(ATTEMPTS_PER_TARGET);
    if total <= budget {
        let mut all: Vec<Derivation> = (0..total).filter_map(attempt).collect();
        if all.len() > target {
            all.shuffle(&mut rng);
            all.truncate(target);
        }
        return all;
    }
    let mut tried = HashSet::new();
    let mut out = Vec::new();
    while out.len() < target && (tried.len() as u128) < budget {
        let idx = rng.gen_range(0..total);
        if tried.insert(idx) {
            out.extend(attempt(idx));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn der(depth: u32, word: &str) -> Derivation {
        Derivation {
            sentence: vec![word.to_string()],
            sem: super::super::Sem::Value {
                value: crate::value::Value::Number(0.0),
                ty: crate::types::TypeTag::Number,
            },
            depth,
            provenance: vec![],
            slots: 0,
        }
    }

    #[test]
    fn combos_cover_exactly_the_fresh_combinations() {
        let a = [der(0, "a0"), der(1, "a1")];
        let b = [der(0, "b0"), der(0, "b1"), der(1, "b2")];
        let cols = vec![
            Column {
                items: a.iter().collect(),
                low: 1,
            },
            Column {
                items: b.iter().collect(),
                low: 2,
            },
        ];
        let combos = Combos::new(cols);
        // oracle: pairs where at least one side has depth 1
        let mut expected = BTreeSet::new();
        for x in &a {
            for y in &b {
                if x.depth == 1 || y.depth == 1 {
                    expected.insert((x.sentence[0].clone(), y.sentence[0].clone()));
                }
            }
        }
        let got: BTreeSet<_> = (0..combos.total())
            .map(|i| {
                let c = combos.decode(i);
                (c[0].sentence[0].clone(), c[1].sentence[0].clone())
            })
            .collect();
        assert_eq!(combos.total() as usize, expected.len());
        assert_eq!(got, expected);
    }
}
