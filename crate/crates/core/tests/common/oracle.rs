use nlq::{execute, print, ExecContext, Location, QueryError, RuntimeError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::reference::{same, Ctx, RefError};
use super::{random_kb, random_query, random_schema};

/// Runs `n` random queries against each of `kbs` random knowledge bases and
/// returns the mismatches.
pub fn oracle_mismatches(kbs: usize, per_kb: usize, seed: u64) -> Vec<String> {
    let schema = random_schema();
    let here = Location::new(37.4, -122.4);
    let ctx = ExecContext::new().with_here(here);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for _ in 0..kbs {
        let kb = random_kb(&schema, &mut rng);
        let reference = Ctx {
            kb: &kb,
            schema: &schema,
            here,
        };
        for _ in 0..per_kb {
            let q = random_query(&mut rng, &schema, &kb, 5);
            let got = execute(&q, &kb, &schema, &ctx);
            let want = reference.run(&q);
            let verdict = match (&got, &want) {
                (Ok(g), Ok(w)) => same(g, w),
                (Err(QueryError::Runtime(e)), Err(k)) => {
                    let kind = match e {
                        RuntimeError::LookupNotFound { .. } => Some(RefError::LookupNotFound),
                        RuntimeError::LookupAmbiguous { .. } => Some(RefError::LookupAmbiguous),
                        RuntimeError::DivisionByZero => Some(RefError::DivisionByZero),
                        _ => None,
                    };
                    if kind.as_ref() == Some(k) {
                        Ok(())
                    } else {
                        Err(format!("error {e} vs {k:?}"))
                    }
                }
                (g, w) => Err(format!(
                    "{:?} vs {:?}",
                    g.as_ref().map(|r| r.len()),
                    w.as_ref().map(|r| r.rows.len())
                )),
            };
            if let Err(m) = verdict {
                bad.push(format!("{}: {m}", print(&q)));
            }
        }
    }
    bad
}
