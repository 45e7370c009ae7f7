//! Provenance counts for a set of derivations.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::template::{Derivation, OpRow, Template};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SynthesisStats {
    pub derivations: usize,
    pub templates: usize,
    /// Derivations per depth.
    pub per_depth: BTreeMap<u32, usize>,
    /// Derivations using at least one template of each family.
    pub per_family: BTreeMap<String, usize>,
    /// Derivations using at least one template of each operator row.
    pub per_op: BTreeMap<String, usize>,
    /// Operator rows no derivation uses.
    pub missing_ops: Vec<String>,
}

pub fn synthesis_stats(templates: &[Template], derivations: &[Derivation]) -> SynthesisStats {
    let mut s = SynthesisStats {
        derivations: derivations.len(),
        templates: templates.len(),
        ..Default::default()
    };
    for d in derivations {
        *s.per_depth.entry(d.depth).or_default() += 1;
        let used: BTreeSet<usize> = d.provenance.iter().map(|&i| i as usize).collect();
        let mut families = BTreeSet::new();
        let mut ops = BTreeSet::new();
        for t in used.iter().filter_map(|&i| templates.get(i)) {
            families.extend(t.family);
            ops.extend(t.op);
        }
        for f in families {
            *s.per_family.entry(f.name().to_string()).or_default() += 1;
        }
        for o in ops {
            *s.per_op.entry(o.name().to_string()).or_default() += 1;
        }
    }
    s.missing_ops = OpRow::ALL
        .iter()
        .map(|o| o.name())
        .filter(|o| !s.per_op.contains_key(*o))
        .map(str::to_string)
        .collect();
    s
}
