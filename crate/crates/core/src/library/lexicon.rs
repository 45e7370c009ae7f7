//! Comparison words by kind of quantity.

use crate::ast::SortDir;
use crate::types::{Dimension, TypeTag};

/// What a comparative talks about. Distance from the user and the length of
/// a field share a dimension but not their words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LexKind {
    Time,
    Duration,
    Distance,
    Length,
    Currency,
    Weight,
    Speed,
    Temperature,
}

#[derive(Debug, Clone, Copy)]
pub struct LexEntry {
    pub kind: LexKind,
    /// Phrases placed before the value ("cheaper than").
    pub comparatives: &'static [(&'static str, SortDir)],
    pub superlatives: &'static [(&'static str, SortDir)],
}

use SortDir::{Asc, Desc};

pub const LEXICON: &[LexEntry] = &[
    LexEntry {
        kind: LexKind::Time,
        comparatives: &[
            ("earlier than", Asc),
            ("before", Asc),
            ("later than", Desc),
            ("after", Desc),
        ],
        superlatives: &[("earliest", Asc), ("latest", Desc)],
    },
    LexEntry {
        kind: LexKind::Duration,
        comparatives: &[("shorter than", Asc), ("longer than", Desc)],
        superlatives: &[("shortest", Asc), ("longest", Desc)],
    },
    LexEntry {
        kind: LexKind::Distance,
        comparatives: &[
            ("closer than", Asc),
            ("nearer than", Asc),
            ("farther than", Desc),
            ("more distant than", Desc),
        ],
        superlatives: &[
            ("nearest", Asc),
            ("closest", Asc),
            ("farthest", Desc),
            ("most distant", Desc),
        ],
    },
    LexEntry {
        kind: LexKind::Length,
        comparatives: &[("shorter than", Asc), ("longer than", Desc)],
        superlatives: &[("shortest", Asc), ("longest", Desc)],
    },
    LexEntry {
        kind: LexKind::Currency,
        comparatives: &[("cheaper than", Asc), ("more expensive than", Desc)],
        superlatives: &[("cheapest", Asc), ("most expensive", Desc)],
    },
    LexEntry {
        kind: LexKind::Weight,
        comparatives: &[
            ("lighter than", Asc),
            ("smaller than", Asc),
            ("heavier than", Desc),
            ("larger than", Desc),
        ],
        superlatives: &[
            ("lightest", Asc),
            ("smallest", Asc),
            ("heaviest", Desc),
            ("largest", Desc),
        ],
    },
    LexEntry {
        kind: LexKind::Speed,
        comparatives: &[("slower than", Asc), ("faster than", Desc)],
        superlatives: &[("slowest", Asc), ("fastest", Desc)],
    },
    LexEntry {
        kind: LexKind::Temperature,
        comparatives: &[("colder than", Asc), ("hotter than", Desc)],
        superlatives: &[("coldest", Asc), ("hottest", Desc)],
    },
];

impl LexKind {
    /// Whether the bare comparative can describe the row itself
    /// ("cheaper than $10" but not "longer than 2 km" for a radius).
    pub fn describes_holder(self) -> bool {
        !matches!(self, LexKind::Length | LexKind::Duration | LexKind::Distance)
    }
}

pub fn entry(kind: LexKind) -> &'static LexEntry {
    LEXICON
        .iter()
        .find(|e| e.kind == kind)
        .expect("every kind has an entry")
}

/// The comparison words that apply to a stored field of this type.
pub fn field_kind(ty: &TypeTag) -> Option<LexKind> {
    Some(match ty {
        TypeTag::Date | TypeTag::Time => LexKind::Time,
        TypeTag::Measure(d) => match d {
            Dimension::Duration => LexKind::Duration,
            Dimension::Distance => LexKind::Length,
            Dimension::Currency => LexKind::Currency,
            Dimension::Weight => LexKind::Weight,
            Dimension::Speed => LexKind::Speed,
            Dimension::Temperature => LexKind::Temperature,
        },
        _ => return None,
    })
}
