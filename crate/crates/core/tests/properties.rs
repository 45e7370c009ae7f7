mod common;

use common::{random_ast, random_kb, random_query, random_schema};
use nlq::{execute, parse, print, AggOp, ExecContext, Filter, Location, Query, Value};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx() -> ExecContext {
    ExecContext::new().with_here(Location::new(37.4, -122.4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>(), depth in 0u32..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_ast(&mut rng, depth);
        let text = print(&q);
        prop_assert_eq!(parse(&text).map_err(|e| e.to_string()), Ok(q), "{}", text);
    }

    #[test]
    fn join_of_unfiltered_tables_is_the_cross_product(seed in any::<u64>()) {
        let s = random_schema();
        let kb = random_kb(&s, &mut ChaCha8Rng::seed_from_u64(seed));
        let q = Query::table("A").select(Filter::True).join(Query::table("B").select(Filter::True));
        let r = execute(&q, &kb, &s, &ctx()).unwrap();
        prop_assert_eq!(r.len(), kb.rows("A").len() * kb.rows("B").len());
    }

    #[test]
    fn count_is_the_row_count(seed in any::<u64>()) {
        let s = random_schema();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(&s, &mut rng);
        let q = random_query(&mut rng, &s, &kb, 4);
        if let Ok(rows) = execute(&q, &kb, &s, &ctx()) {
            let counted = execute(&q.clone().aggregate(AggOp::Count, None), &kb, &s, &ctx()).unwrap();
            prop_assert_eq!(counted.get(0, "result"), Some(&Value::Number(rows.len() as f64)));
        }
    }

    #[test]
    fn slice_length(seed in any::<u64>(), a in 1usize..8, b in 0usize..25) {
        let s = random_schema();
        let kb = random_kb(&s, &mut ChaCha8Rng::seed_from_u64(seed));
        let q = Query::table("A").slice(Value::Number(a as f64), Value::Number(b as f64));
        let n = execute(&q, &kb, &s, &ctx()).unwrap().len();
        let expected = (b.min(kb.rows("A").len()) + 1).saturating_sub(a);
        prop_assert_eq!(n, expected);
    }

    #[test]
    fn sort_is_stable(seed in any::<u64>()) {
        let s = random_schema();
        let kb = random_kb(&s, &mut ChaCha8Rng::seed_from_u64(seed));
        let r = execute(&Query::table("B").sort("score", nlq::SortDir::Asc), &kb, &s, &ctx()).unwrap();
        let position = |id: &str| kb.rows("B").iter().position(|row| row.id == id).unwrap();
        let ids = r.ids();
        for w in ids.windows(2) {
            let (x, y) = (&kb.rows("B")[position(&w[0])], &kb.rows("B")[position(&w[1])]);
            if x.get("score") == y.get("score") {
                prop_assert!(position(&w[0]) < position(&w[1]));
            }
        }
    }

    #[test]
    fn exists_matches_brute_force(seed in any::<u64>(), threshold in 0u32..6) {
        let s = random_schema();
        let kb = random_kb(&s, &mut ChaCha8Rng::seed_from_u64(seed));
        let t = threshold as f64;
        let q = parse(&format!("@B , exists ( @A , score >= {t} ) {{ in_array ( id , members ) }}")).unwrap();
        let got = execute(&q, &kb, &s, &ctx()).unwrap().ids();
        let expected: Vec<String> = kb
            .rows("B")
            .iter()
            .filter(|b| match b.get("members") {
                Some(Value::Array(ms)) => kb.rows("A").iter().any(|a| {
                    ms.iter().any(|m| matches!(m, Value::Entity { id, .. } if *id == a.id))
                        && matches!(a.get("score"), Some(Value::Number(x)) if *x >= t)
                }),
                _ => false,
            })
            .map(|b| b.id.clone())
            .collect();
        prop_assert_eq!(got, expected);
    }
}

fn record() -> impl Strategy<Value = nlq::DatasetRecord> {
    let word = "[a-z0-9_.@\"]{1,8}";
    (
        0usize..1000,
        0u32..4,
        proptest::collection::vec(word, 1..10),
        proptest::collection::vec(word, 1..10),
    )
        .prop_map(|(i, k, s, c)| nlq::DatasetRecord::new(format!("S{i:06}-{k}"), &s.join(" "), &c.join(" ")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tsv_round_trips(records in proptest::collection::vec(record(), 0..30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tsv");
        nlq::dataset::emit(&records, &path).unwrap();
        prop_assert_eq!(nlq::dataset::load(&path).unwrap(), records);
    }

    #[test]
    fn split_is_a_partition(records in proptest::collection::vec(record(), 0..60), seed in any::<u64>()) {
        let parts = nlq::dataset::split(&records, &[0.8, 0.1, 0.1], seed);
        let mut all: Vec<_> = parts.concat();
        let mut expected = records.clone();
        all.sort();
        expected.sort();
        prop_assert_eq!(all, expected);
        for (i, p) in parts.iter().enumerate() {
            for q in &parts[i + 1..] {
                prop_assert!(p.iter().all(|r| q.iter().all(|o| o.base_id() != r.base_id())));
            }
        }
    }
}

#[test]
fn augmentation_is_deterministic_and_deduplicated() {
    let out = common::restaurants();
    let lib = nlq::builtin_templates(&out.schema, &nlq::LibraryOptions::default());
    let cfg = nlq::ExpansionConfig {
        max_depth: 3,
        seed: 5,
        ..Default::default()
    };
    let ds = nlq::expand(&lib.templates, &out.schema, &cfg).unwrap();
    let pairs = nlq::augment::synthesized_records(&ds);
    let a = nlq::augment(&pairs, &out.kb, &out.schema, 3, 9);
    let b = nlq::augment(&pairs, &out.kb, &out.schema, 3, 9);
    assert_eq!(a.records, b.records);
    let mut seen = std::collections::HashSet::new();
    for r in &a.records {
        assert!(seen.insert((r.sentence.clone(), r.code.clone())), "{}", r.to_line());
        assert!(!r.has_placeholders());
    }
    let c = nlq::augment(&pairs, &out.kb, &out.schema, 3, 10);
    assert_ne!(a.records, c.records);
}

#[test]
fn exhaustive_expansion_is_deterministic() {
    let out = common::restaurants();
    let lib = nlq::builtin_templates(&out.schema, &nlq::LibraryOptions::default());
    let cfg = |seed| nlq::ExpansionConfig {
        max_depth: 2,
        seed,
        exhaustive: true,
        ..Default::default()
    };
    let a = nlq::expand(&lib.templates, &out.schema, &cfg(1)).unwrap();
    let b = nlq::expand(&lib.templates, &out.schema, &cfg(2)).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].sentence < w[1].sentence));
}
