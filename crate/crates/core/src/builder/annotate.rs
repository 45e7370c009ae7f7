//! Heuristic natural-language annotations derived from field names.

use crate::schema::{AnnotationSet, Pos};
use crate::types::TypeTag;

/// Third-person verbs recognized at the start of a property name.
pub const VERBS: &[&str] = &[
    "accepts",
    "affects",
    "attends",
    "awards",
    "belongs",
    "cites",
    "contains",
    "covers",
    "creates",
    "delivers",
    "describes",
    "directs",
    "edits",
    "employs",
    "features",
    "follows",
    "funds",
    "gives",
    "holds",
    "hosts",
    "illustrates",
    "includes",
    "knows",
    "leads",
    "likes",
    "lists",
    "lives",
    "loves",
    "makes",
    "manages",
    "mentions",
    "needs",
    "offers",
    "operates",
    "organizes",
    "owns",
    "performs",
    "plays",
    "produces",
    "provides",
    "publishes",
    "receives",
    "recommends",
    "requires",
    "returns",
    "reviews",
    "sells",
    "serves",
    "ships",
    "speaks",
    "sponsors",
    "stays",
    "studies",
    "supports",
    "teaches",
    "translates",
    "treats",
    "uses",
    "visits",
    "wants",
    "wins",
    "works",
    "writes",
];

pub const PREPOSITIONS: &[&str] = &[
    "of", "for", "in", "at", "on", "by", "from", "with", "to", "about", "into", "near",
];

const STRIP_SUFFIXES: &[&str] = &["value", "content"];

const NOT_PARTICIPLES: &[&str] = &["need", "speed", "seed", "bed", "red", "feed", "bred", "shed"];

/// Splits a camel-cased identifier into lowercase words. Runs of capitals are
/// kept together ("URLTemplate" gives "url", "template"); digits split off.
pub fn split_camel(name: &str) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut words = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let boundary = match prev {
            None => false,
            Some(p) if !p.is_alphanumeric() => false,
            Some(p) => {
                (c.is_uppercase() && p.is_lowercase())
                    || (c.is_uppercase() && p.is_uppercase() && next.is_some_and(|n| n.is_lowercase()))
                    || (c.is_ascii_digit() != p.is_ascii_digit())
            }
        };
        if boundary && !cur.is_empty() {
            words.push(std::mem::take(&mut cur));
        }
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words
}

fn is_participle(w: &str) -> bool {
    w.len() > 4 && w.ends_with("ed") && !NOT_PARTICIPLES.contains(&w)
}

/// Annotations for a field. `owners` are the table name and, for flattened
/// record fields, the parent property names; their words are stripped from
/// the ends of the field name when something else remains.
pub fn auto_annotate(field: &str, ty: &TypeTag, owners: &[&str]) -> AnnotationSet {
    let last = field.rsplit('.').next().unwrap_or(field);
    let mut words = split_camel(last);
    let mut owner_words: Vec<String> = owners.iter().flat_map(|o| split_camel(o)).collect();
    for parent in field.split('.').rev().skip(1) {
        owner_words.extend(split_camel(parent));
    }

    if words.len() > 1 && STRIP_SUFFIXES.contains(&words[words.len() - 1].as_str()) {
        words.pop();
    }
    while words.len() > 1 && owner_words.contains(&words[0]) {
        words.remove(0);
    }
    while words.len() > 1 && owner_words.contains(&words[words.len() - 1]) {
        words.pop();
    }
    if words.is_empty() {
        words = vec![last.to_lowercase()];
    }

    let mut out = AnnotationSet::new();
    let first = words[0].as_str();
    let rest = |from: usize| words[from..].join(" ");

    if words.len() > 1 && (first == "has" || first == "is") {
        let noun = rest(1);
        let last_is_prep = PREPOSITIONS.contains(&words[words.len() - 1].as_str());
        let phrase = if last_is_prep {
            format!("{noun} #")
        } else {
            format!("# {noun}")
        };
        out.add(Pos::Base, &noun);
        out.add(if first == "has" { Pos::HasANoun } else { Pos::IsANoun }, &phrase);
        return out;
    }

    if VERBS.contains(&first) {
        let mut i = 1;
        while i < words.len() && PREPOSITIONS.contains(&words[i].as_str()) {
            i += 1;
        }
        let verb = words[..i].join(" ");
        let object = rest(i);
        if object.is_empty() {
            out.add(Pos::Base, &verb);
            out.add(Pos::ActiveVerb, &format!("{verb} #"));
        } else {
            out.add(Pos::Base, &object);
            out.add(Pos::ActiveVerb, &format!("{verb} # {object}"));
        }
        return out;
    }

    let phrase = words.join(" ");
    out.add(Pos::Base, &phrase);
    let tail = words[words.len() - 1].as_str();
    if words.len() > 1 && PREPOSITIONS.contains(&tail) {
        out.add(Pos::IsANoun, &format!("{phrase} #"));
    } else if is_participle(tail) {
        let prep = match ty {
            TypeTag::Date | TypeTag::Time => "on",
            TypeTag::Location => "in",
            _ => "by",
        };
        out.add(Pos::PassiveVerb, &format!("{tail} {prep} #"));
    }
    out
}

/// Union per category with manual phrases first and duplicates removed.
pub fn merge_annotations(auto: &AnnotationSet, manual: &AnnotationSet) -> AnnotationSet {
    let mut out = AnnotationSet::new();
    for (pos, phrase) in manual.iter().chain(auto.iter()) {
        out.add(pos, phrase);
    }
    for src in [manual, auto] {
        for (pos, list) in &src.reverse {
            for p in list {
                out = out.with_reverse(*pos, p);
            }
        }
    }
    out
}
