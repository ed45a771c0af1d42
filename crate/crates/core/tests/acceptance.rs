//! Acceptance criteria for the solver stack, each run at its stated size and
//! tolerance. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails.

use std::io::Write;
use std::time::{Duration, Instant};

use irs_relay::suites::{self, Check};

const SEED: u64 = 0x5eed_1234;

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> irs_relay::Result<Vec<Check>>,
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "cascade vectorization identity, 1e3 instances, 1e-10 relative",
            budget: Some(Duration::from_secs(5)),
            run: || Ok(vec![suites::appendix1_identity(1000, SEED)?]),
        },
        Criterion {
            id: 2,
            title: "closed-form RSI bound dominates 1e3-sample brute force on 200 instances",
            budget: Some(Duration::from_secs(60)),
            run: || {
                Ok(vec![suites::theorem1_dominance(200, 1000, SEED)?, suites::theorem1_rank_deficient(200, SEED)?])
            },
        },
        Criterion {
            id: 3,
            title: "determinant sandwich on 1e3 pairs, equality for commuting pairs",
            budget: None,
            run: || Ok(vec![suites::fiedler_sandwich(1000, SEED)?, suites::fiedler_commuting(1000, SEED)?]),
        },
        Criterion {
            id: 4,
            title: "commuting covariance construction on 1e3 pairs",
            budget: None,
            run: || Ok(vec![suites::theorem2_construction(1000, SEED)?]),
        },
        Criterion {
            id: 5,
            title: "capped water-filling and adversary against oracles, budget equalities",
            budget: None,
            run: || {
                Ok(vec![
                    suites::capped_fill_vs_oracle(100, SEED)?,
                    suites::adversary_vs_oracle(100, SEED)?,
                    suites::budget_equalities(1000, SEED)?,
                ])
            },
        },
        Criterion {
            id: 6,
            title: "interference ordering at adversary outputs, 1e3 instances",
            budget: None,
            run: || Ok(vec![suites::appendix5_ordering(1000, SEED)?]),
        },
        Criterion {
            id: 7,
            title: "outer bisection within 1e-4 of a 1e4-point grid, single crossing of g",
            budget: None,
            run: || Ok(vec![suites::outer_vs_grid(50, 10_000, SEED)?, suites::gap_single_crossing(50, 50, SEED)?]),
        },
        Criterion {
            id: 8,
            title: "FD/HD ratio in [1.9, 2.0] on symmetric instances at zero RSI",
            budget: None,
            run: || Ok(vec![suites::zero_rsi_doubling(100, SEED)?]),
        },
        Criterion {
            id: 9,
            title: "paired-seed rate trends in T_r and M, {4,5,5,4}, L = 100",
            budget: Some(Duration::from_secs(600)),
            run: || suites::trend_checks(100, SEED),
        },
        Criterion {
            id: 10,
            title: "at least 95% of 1e3 trials converge within 50 inner iterations",
            budget: None,
            run: || Ok(vec![suites::convergence_statistics(1000, SEED)?]),
        },
    ]
}

#[test]
fn acceptance_criteria() {
    let mut out = std::io::stdout().lock();
    // Start on a fresh line after the harness's `test ... ` prefix.
    writeln!(out).unwrap();
    let mut failed = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (ok, lines) = match result {
            Ok(checks) => {
                let in_time = c.budget.is_none_or(|b| elapsed < b);
                let mut lines: Vec<String> = checks
                    .iter()
                    .map(|ch| format!("    {} {}: {}", if ch.passed { "ok  " } else { "FAIL" }, ch.name, ch.detail))
                    .collect();
                if let Some(b) = c.budget {
                    lines.push(format!("    {} runtime {:.1?} (limit {:?})", if in_time { "ok  " } else { "FAIL" }, elapsed, b));
                }
                (in_time && checks.iter().all(|ch| ch.passed), lines)
            }
            Err(e) => (false, vec![format!("    FAIL error: {e}")]),
        };
        let verdict = if ok { "PASS" } else { "FAIL" };
        writeln!(out, "{verdict} criterion {}: {} [{elapsed:.1?}]", c.id, c.title).unwrap();
        for l in lines {
            writeln!(out, "{l}").unwrap();
        }
        out.flush().unwrap();
        if !ok {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
