//! Acceptance criteria. Prints one PASS/FAIL line per criterion, then fails
//! if any criterion failed. Run with `--nocapture` to see the lines.

mod common;

use std::time::{Duration, Instant};

use common::oracle::oracle_mismatches;
use common::{random_ast, restaurants, stanford, worked};
use nlq::builder::BuildOutput;
use nlq::dataset::{is_copyable, to_tsv};
use nlq::{
    augment, builtin_templates, expand, parse, print, synthesis_stats, validate_text, Augmented, Derivation,
    ExecContext, ExpansionConfig, LibraryOptions, Pos, SynthesisStats, TypeTag,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DEPTH: u32 = 6;
const SEED: u64 = 42;
const MULTIPLIER: u32 = 2;
const MIN_RECORDS: usize = 10_000;
const CORPUS_BUDGET: Duration = Duration::from_secs(120);
const MIN_EXECUTE_PCT: f64 = 99.0;
const RATIO_BAND: (f64, f64) = (1.5, 2.5);
const ORACLE_KBS: usize = 50;
const ORACLE_QUERIES: usize = 1_000;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const ROUND_TRIPS: u64 = 10_000;

struct Corpus {
    derivations: Vec<Derivation>,
    stats: SynthesisStats,
    augmented: Augmented,
    tsv: String,
}

fn corpus(out: &BuildOutput) -> Corpus {
    let lib = builtin_templates(&out.schema, &LibraryOptions { refinements: true });
    let cfg = ExpansionConfig {
        max_depth: DEPTH,
        seed: SEED,
        ..Default::default()
    };
    let derivations = expand(&lib.templates, &out.schema, &cfg).unwrap();
    let stats = synthesis_stats(&lib.templates, &derivations);
    let pairs = nlq::augment::synthesized_records(&derivations);
    let augmented = augment(&pairs, &out.kb, &out.schema, MULTIPLIER, SEED);
    let tsv = to_tsv(&augmented.records);
    Corpus {
        derivations,
        stats,
        augmented,
        tsv,
    }
}

#[derive(Default)]
struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, n: u32, ok: bool, text: String) {
        println!("{} {n}. {text}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(n);
        }
    }
}

#[test]
fn acceptance() {
    let mut report = Report::default();
    let out = restaurants();

    let start = Instant::now();
    let c = corpus(&out);
    let elapsed = start.elapsed();
    let ctx = ExecContext::new().with_here(stanford());
    let v = validate_text(&c.tsv, &out.kb, &out.schema, &ctx);
    report.line(
        1,
        c.augmented.records.len() >= MIN_RECORDS
            && elapsed < CORPUS_BUDGET
            && v.parse_pct == 100.0
            && v.typecheck_pct == 100.0
            && v.execute_pct >= MIN_EXECUTE_PCT,
        format!(
            "corpus validity: {} records in {:.1}s (need >= {MIN_RECORDS} in < {}s); parse {:.2}%, typecheck {:.2}%, execute {:.2}%",
            c.augmented.records.len(),
            elapsed.as_secs_f64(),
            CORPUS_BUDGET.as_secs(),
            v.parse_pct,
            v.typecheck_pct,
            v.execute_pct
        ),
    );

    let ratio = c.augmented.records.len() as f64 / c.derivations.len() as f64;
    report.line(
        2,
        c.stats.missing_ops.is_empty() && (RATIO_BAND.0..=RATIO_BAND.1).contains(&ratio),
        format!(
            "operator coverage: {}/16 operator rows present (missing {:?}); augmented/synthesized = {}/{} = {ratio:.2} (band {}-{})",
            c.stats.per_op.len(),
            c.stats.missing_ops,
            c.augmented.records.len(),
            c.derivations.len(),
            RATIO_BAND.0,
            RATIO_BAND.1
        ),
    );

    let start = Instant::now();
    let bad = oracle_mismatches(ORACLE_KBS, ORACLE_QUERIES / ORACLE_KBS, 3);
    let elapsed = start.elapsed();
    report.line(
        3,
        bad.is_empty() && elapsed < ORACLE_BUDGET,
        format!(
            "engine oracle: {} mismatches in {ORACLE_QUERIES} queries over {ORACLE_KBS} knowledge bases, {:.1}s (budget {}s){}",
            bad.len(),
            elapsed.as_secs_f64(),
            ORACLE_BUDGET.as_secs(),
            bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
        ),
    );

    let examples = worked::all();
    let failures: Vec<String> = examples
        .iter()
        .filter_map(|(name, f)| f().err().map(|e| format!("{name}: {e}")))
        .collect();
    report.line(
        4,
        failures.is_empty(),
        format!(
            "worked examples: {}/{} questions return the brute-force answer{}",
            examples.len() - failures.len(),
            examples.len(),
            failures
                .first()
                .map(|f| format!("; first failure: {f}"))
                .unwrap_or_default()
        ),
    );

    let s = &out.schema;
    let field = |name: &str| s.field("Restaurant", name);
    let checks = [
        (
            "aggregateRating.ratingValue: Number",
            field("aggregateRating.ratingValue").is_some_and(|f| f.ty == TypeTag::Number),
        ),
        (
            "aggregateRating.reviewCount: Number",
            field("aggregateRating.reviewCount").is_some_and(|f| f.ty == TypeTag::Number),
        ),
        (
            "servesCuisine: String, \"serves # cuisine\"",
            field("servesCuisine").is_some_and(|f| {
                f.ty == TypeTag::String
                    && f.annotations
                        .get(Pos::ActiveVerb)
                        .iter()
                        .any(|p| p == "serves # cuisine")
            }),
        ),
        (
            "description singular",
            field("description").is_some_and(|f| !f.is_array),
        ),
        (
            "Review is a linked table",
            s.has_table("Review") && field("review").is_some_and(|f| f.ty == TypeTag::EntityRef("Review".into())),
        ),
    ];
    let wrong: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    report.line(
        5,
        wrong.is_empty(),
        format!(
            "schema builder: {}/{} structural checks hold {wrong:?}",
            checks.len() - wrong.len(),
            checks.len()
        ),
    );

    let mut round_trip_failures = 0;
    for seed in 0..ROUND_TRIPS {
        let q = random_ast(&mut ChaCha8Rng::seed_from_u64(seed), (seed % 6) as u32);
        if parse(&print(&q)).ok().as_ref() != Some(&q) {
            round_trip_failures += 1;
        }
    }
    let not_copyable = c.augmented.records.iter().filter(|r| !is_copyable(r)).count();
    let again = corpus(&out);
    let identical = again.tsv == c.tsv;
    report.line(
        6,
        round_trip_failures == 0 && not_copyable == 0 && identical,
        format!(
            "properties: {round_trip_failures}/{ROUND_TRIPS} round-trip failures; {not_copyable}/{} records break copyable spans; repeated run byte-identical: {identical} ({} bytes)",
            c.augmented.records.len(),
            c.tsv.len()
        ),
    );

    println!(
        "NOT REPRODUCED 7. semantic parser accuracy (69.7% average on crowdsourced questions): needs a trained neural \
         parser and crowdsourced test sets, neither of which is part of this toolkit; criteria 1-6 are the dataset-side contract"
    );

    assert!(report.failed.is_empty(), "failed criteria: {:?}", report.failed);
}
