//! Whether a property holds one value or a list.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value as Json;

/// Properties documented as plural that hold one value in practice.
pub const SINGULAR_OVERRIDES: &[&str] = &["image", "description", "name", "url"];

/// Words ending in `s` that are not plural nouns at the start of a comment.
const NOT_PLURAL: &[&str] = &[
    "this", "is", "was", "has", "its", "his", "hers", "does", "as", "us", "yes", "always", "whereas", "thus", "plus",
    "status", "address", "series", "species", "news", "gps",
];

fn plural_lead() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:the |a |an )?([a-z]+s)\b").expect("valid regex"))
}

fn plural_phrase() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(one or more|list of)\b").expect("valid regex"))
}

/// True when the documentation comment reads as describing several values.
pub fn comment_is_plural(comment: &str) -> bool {
    let c = comment.trim().to_lowercase();
    if plural_phrase().is_match(&c) {
        return true;
    }
    match plural_lead().captures(&c) {
        Some(m) => {
            let w = &m[1];
            !w.ends_with("ss") && !w.ends_with("us") && !NOT_PLURAL.contains(&w)
        }
        None => false,
    }
}

/// `is_array` for a property: a list type, a plural comment, or any observed
/// JSON array, unless the property is on the singular override list.
pub fn infer_cardinality(property: &str, ranges: &[String], comment: &str, observed: &[&Json]) -> bool {
    if SINGULAR_OVERRIDES.contains(&property) || ranges.first().is_some_and(|r| r == "Boolean") {
        return false;
    }
    ranges.iter().any(|r| r == "ItemList") || observed.iter().any(|j| j.is_array()) || comment_is_plural(comment)
}
