//! Worked questions over the bundled fixtures. Expected answers are computed
//! straight from the raw JSON files, not from the built knowledge base.

macro_rules! ensure {
    ($c:expr) => {{
        let holds: bool = $c;
        if !holds {
            return Err(format!("failed: {}", stringify!($c)));
        }
    }};
    ($c:expr, $($m:tt)+) => {{
        let holds: bool = $c;
        if !holds {
            return Err(format!($($m)+));
        }
    }};
}

macro_rules! ensure_eq {
    ($a:expr, $b:expr $(,)?) => {{
        let (a, b) = (&$a, &$b);
        if a != b {
            return Err(format!("{} = {:?}, expected {:?}", stringify!($a), a, b));
        }
    }};
}

use std::collections::BTreeSet;

use super::{comparison, fixtures, restaurants, stanford};
use nlq::{execute, parse, ExecContext, KnowledgeBase, Location, ResultSet, Value};
use serde_json::Value as Json;

fn raw_restaurants() -> Vec<Json> {
    let mut out = Vec::new();
    let mut files: Vec<_> = std::fs::read_dir(fixtures().join("restaurants/data"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        let doc: Json = serde_json::from_str(&std::fs::read_to_string(f).unwrap()).unwrap();
        out.extend(
            doc.as_array()
                .unwrap()
                .iter()
                .filter(|d| d["@type"] == "Restaurant")
                .cloned(),
        );
    }
    out
}

fn raw_table(name: &str) -> Vec<Json> {
    let path = fixtures().join(format!("comparison/kb/{name}.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6_371_000.0 * a.sqrt().atan2((1.0 - a).sqrt())
}

fn run(q: &str, kb: &KnowledgeBase, schema: &nlq::NlSchema) -> Result<ResultSet, String> {
    let ctx = ExecContext::new().with_here(stanford());
    let query = parse(q).map_err(|e| format!("{q}: {e}"))?;
    nlq::typecheck(&query, schema).map_err(|e| format!("{q}: {e}"))?;
    execute(&query, kb, schema, &ctx).map_err(|e| format!("{q}: {e}"))
}

fn names(r: &ResultSet, kb: &KnowledgeBase, table: &str) -> BTreeSet<String> {
    r.ids()
        .iter()
        .map(|id| {
            let row = kb.rows(table).iter().find(|row| &row.id == id).unwrap();
            row.name().unwrap().to_string()
        })
        .collect()
}

fn lower(s: &str) -> String {
    s.to_lowercase()
}

fn rating(r: &Json) -> Option<f64> {
    r["aggregateRating"]["ratingValue"].as_f64()
}

fn distance_from_here(r: &Json) -> f64 {
    let here = stanford();
    haversine(
        here.lat,
        here.lon,
        r["geo"]["latitude"].as_f64().unwrap(),
        r["geo"]["longitude"].as_f64().unwrap(),
    )
}

pub fn nearest_restaurant() -> Result<(), String> {
    let out = restaurants();
    let r = run(
        "( sort distance asc of compute distance ( geo , here ) of @Restaurant ) [ 1 ]",
        &out.kb,
        &out.schema,
    )?;
    ensure_eq!(r.len(), 1);
    let raw = raw_restaurants();
    let nearest = raw
        .iter()
        .min_by(|a, b| distance_from_here(a).total_cmp(&distance_from_here(b)))
        .unwrap();
    ensure_eq!(
        names(&r, &out.kb, "Restaurant"),
        BTreeSet::from([lower(nearest["name"].as_str().unwrap())])
    );
    match r.get(0, "distance") {
        Some(Value::Measure(d, _)) => ensure!((d - distance_from_here(nearest)).abs() < 1.0),
        other => return Err(format!("distance column: {other:?}")),
    }
    Ok(())
}

pub fn one_star_reviewers_of_shake_shack() -> Result<(), String> {
    let out = restaurants();
    let r = run(
        "[ author ] of ( ( @Restaurant , id == lookup ( \" shake shack \" , @Restaurant ) ) join \
         ( @Review , reviewRating.ratingValue == 1 ) ) , in_array ( id , review )",
        &out.kb,
        &out.schema,
    )?;
    let expected: BTreeSet<String> = raw_restaurants()
        .iter()
        .filter(|x| x["name"] == "Shake Shack")
        .flat_map(|x| x["review"].as_array().cloned().unwrap_or_default())
        .filter(|rv| rv["reviewRating"]["ratingValue"].as_f64() == Some(1.0))
        .map(|rv| lower(rv["author"]["name"].as_str().unwrap()))
        .collect();
    ensure!(!expected.is_empty());
    let got = (0..r.len())
        .map(|i| match r.get(i, "author") {
            Some(Value::Entity { id, .. }) => Ok(out
                .kb
                .rows("Person")
                .iter()
                .find(|p| &p.id == id)
                .unwrap()
                .name()
                .unwrap()
                .to_string()),
            other => Err(format!("author column: {other:?}")),
        })
        .collect::<Result<BTreeSet<String>, String>>()?;
    ensure_eq!(got, expected);
    Ok(())
}

fn restaurant_names(pred: impl Fn(&Json) -> bool) -> BTreeSet<String> {
    raw_restaurants()
        .iter()
        .filter(|r| pred(r))
        .map(|r| lower(r["name"].as_str().unwrap()))
        .collect()
}

pub fn highly_rated_restaurants_within_five_km() -> Result<(), String> {
    let out = restaurants();
    let r = run(
        "( compute distance ( geo , location ( 37.4275 , -122.1697 ) ) of @Restaurant ) , \
         distance <= 5000 m && aggregateRating.ratingValue >= 4.5 && ! aggregateRating.ratingValue == 4.5",
        &out.kb,
        &out.schema,
    )?;
    let expected = restaurant_names(|x| distance_from_here(x) <= 5000.0 && rating(x).is_some_and(|v| v > 4.5));
    ensure!(!expected.is_empty());
    ensure_eq!(names(&r, &out.kb, "Restaurant"), expected);
    Ok(())
}

pub fn rated_at_least_four_with_many_reviews() -> Result<(), String> {
    let out = restaurants();
    let r = run(
        "@Restaurant , aggregateRating.ratingValue >= 4 && aggregateRating.reviewCount >= 100",
        &out.kb,
        &out.schema,
    )?;
    let expected = restaurant_names(|x| {
        rating(x).is_some_and(|v| v >= 4.0) && x["aggregateRating"]["reviewCount"].as_f64().is_some_and(|c| c >= 100.0)
    });
    ensure!(!expected.is_empty());
    ensure_eq!(names(&r, &out.kb, "Restaurant"), expected);
    Ok(())
}

pub fn best_chinese_restaurant_in_hawaii() -> Result<(), String> {
    let out = restaurants();
    let r = run(
        "( sort aggregateRating.ratingValue desc of ( @Restaurant , contains ( servesCuisine , \" chinese \" ) \
         && address.addressRegion == \" hi \" ) ) [ 1 ]",
        &out.kb,
        &out.schema,
    )?;
    let candidates: Vec<Json> = raw_restaurants()
        .into_iter()
        .filter(|x| {
            x["address"]["addressRegion"] == "HI"
                && match &x["servesCuisine"] {
                    Json::Array(c) => c.iter().any(|s| s == "Chinese"),
                    s => s == "Chinese",
                }
        })
        .collect();
    let best = candidates.iter().filter_map(rating).fold(f64::MIN, f64::max);
    let expected: BTreeSet<String> = candidates
        .iter()
        .filter(|x| rating(x) == Some(best))
        .map(|x| lower(x["name"].as_str().unwrap()))
        .collect();
    ensure_eq!(r.len(), 1);
    ensure!(expected.is_superset(&names(&r, &out.kb, "Restaurant")));
    Ok(())
}

pub fn distance_to_nearest_good_restaurant() -> Result<(), String> {
    let out = restaurants();
    let r = run(
        "[ distance ] of ( sort distance asc of compute distance ( geo , here ) of \
         ( @Restaurant , aggregateRating.ratingValue >= 4 ) ) [ 1 ]",
        &out.kb,
        &out.schema,
    )?;
    let expected = raw_restaurants()
        .iter()
        .filter(|x| rating(x).is_some_and(|v| v >= 4.0))
        .map(distance_from_here)
        .fold(f64::INFINITY, f64::min);
    match r.get(0, "distance") {
        Some(Value::Measure(d, _)) => ensure!((d - expected).abs() < 1.0, "{d} vs {expected}"),
        other => return Err(format!("{other:?}")),
    }
    Ok(())
}

fn org_id(name: &str) -> String {
    raw_table("Organization").iter().find(|o| o["name"] == name).unwrap()["id"]
        .as_str()
        .unwrap()
        .to_string()
}

fn people(pred: impl Fn(&Json) -> bool) -> BTreeSet<String> {
    raw_table("Person")
        .iter()
        .filter(|p| pred(p))
        .map(|p| lower(p["name"].as_str().unwrap()))
        .collect()
}

fn has(p: &Json, field: &str, value: &str) -> bool {
    p[field].as_array().is_some_and(|xs| xs.iter().any(|x| x == value))
}

pub fn worked_at_w3c_and_studied_at_oxford() -> Result<(), String> {
    let (schema, kb) = comparison();
    let r = run(
        "@Person , contains ( worksFor , lookup ( \" w3c \" , @Organization ) ) && \
         contains ( alumniOf , lookup ( \" university of oxford \" , @Organization ) )",
        &kb,
        &schema,
    )?;
    let (w3c, oxford) = (org_id("W3C"), org_id("University of Oxford"));
    let expected = people(|p| has(p, "worksFor", &w3c) && has(p, "alumniOf", &oxford));
    ensure!(!expected.is_empty());
    ensure_eq!(names(&r, &kb, "Person"), expected);
    Ok(())
}

pub fn worked_for_google_and_amazon() -> Result<(), String> {
    let (schema, kb) = comparison();
    let r = run(
        "@Person , contains ( worksFor , lookup ( \" google \" , @Organization ) ) && \
         contains ( worksFor , lookup ( \" amazon \" , @Organization ) )",
        &kb,
        &schema,
    )?;
    let (g, a) = (org_id("Google"), org_id("Amazon"));
    let expected = people(|p| has(p, "worksFor", &g) && has(p, "worksFor", &a));
    ensure!(expected.len() >= 2);
    ensure_eq!(names(&r, &kb, "Person"), expected);
    Ok(())
}

pub fn stanford_graduates_with_a_nobel_prize() -> Result<(), String> {
    let (schema, kb) = comparison();
    let r = run(
        "@Person , contains ( alumniOf , lookup ( \" stanford university \" , @Organization ) ) && \
         contains ( award , \" nobel prize \" )",
        &kb,
        &schema,
    )?;
    let s = org_id("Stanford University");
    let expected = people(|p| has(p, "alumniOf", &s) && has(p, "award", "nobel prize"));
    ensure!(!expected.is_empty());
    ensure_eq!(names(&r, &kb, "Person"), expected);
    Ok(())
}

pub fn people_with_three_or_more_employers() -> Result<(), String> {
    let (schema, kb) = comparison();
    let r = run("( compute count ( worksFor ) of @Person ) , count >= 3", &kb, &schema)?;
    let expected = people(|p| p["worksFor"].as_array().is_some_and(|w| w.len() >= 3));
    ensure!(!expected.is_empty());
    ensure_eq!(names(&r, &kb, "Person"), expected);
    Ok(())
}

fn minutes(t: &str) -> u32 {
    let (h, m) = t.split_once(':').unwrap();
    h.parse::<u32>().unwrap() * 60 + m[..2].parse::<u32>().unwrap()
}

fn hotels(pred: impl Fn(&Json) -> bool) -> BTreeSet<String> {
    raw_table("Hotel")
        .iter()
        .filter(|h| pred(h))
        .map(|h| lower(h["name"].as_str().unwrap()))
        .collect()
}

pub fn hotels_with_late_checkout() -> Result<(), String> {
    let (schema, kb) = comparison();
    let r = run(
        "@Hotel , checkoutTime >= 12:00 && ! checkoutTime == 12:00",
        &kb,
        &schema,
    )?;
    let expected = hotels(|h| h["checkoutTime"].as_str().is_some_and(|t| minutes(t) > 12 * 60));
    ensure!(!expected.is_empty());
    ensure_eq!(names(&r, &kb, "Hotel"), expected);
    Ok(())
}

pub fn nearby_hotels_with_a_pool() -> Result<(), String> {
    let (schema, kb) = comparison();
    let r = run(
        "( compute distance ( geo , here ) of @Hotel ) , distance <= 10 km && \
         contains ( amenityFeature , \" swimming pool \" )",
        &kb,
        &schema,
    )?;
    let here: Location = stanford();
    let expected = hotels(|h| {
        let d = haversine(
            here.lat,
            here.lon,
            h["geo"]["lat"].as_f64().unwrap(),
            h["geo"]["lon"].as_f64().unwrap(),
        );
        d <= 10_000.0 && has(h, "amenityFeature", "swimming pool")
    });
    ensure!(!expected.is_empty());
    ensure_eq!(names(&r, &kb, "Hotel"), expected);
    Ok(())
}

/// Every worked question with its name.
pub type Check = fn() -> Result<(), String>;

pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("nearest_restaurant", nearest_restaurant),
        ("one_star_reviewers_of_shake_shack", one_star_reviewers_of_shake_shack),
        (
            "highly_rated_restaurants_within_five_km",
            highly_rated_restaurants_within_five_km,
        ),
        (
            "rated_at_least_four_with_many_reviews",
            rated_at_least_four_with_many_reviews,
        ),
        ("best_chinese_restaurant_in_hawaii", best_chinese_restaurant_in_hawaii),
        (
            "distance_to_nearest_good_restaurant",
            distance_to_nearest_good_restaurant,
        ),
        (
            "worked_at_w3c_and_studied_at_oxford",
            worked_at_w3c_and_studied_at_oxford,
        ),
        ("worked_for_google_and_amazon", worked_for_google_and_amazon),
        (
            "stanford_graduates_with_a_nobel_prize",
            stanford_graduates_with_a_nobel_prize,
        ),
        (
            "people_with_three_or_more_employers",
            people_with_three_or_more_employers,
        ),
        ("hotels_with_late_checkout", hotels_with_late_checkout),
        ("nearby_hotels_with_a_pool", nearby_hotels_with_a_pool),
    ]
}
