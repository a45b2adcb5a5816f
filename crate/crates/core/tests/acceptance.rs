//! Acceptance run: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ptsm_core::suite::{self, PropertyResult, SuiteConfig};

struct Criterion {
    id: usize,
    title: &'static str,
    limit: Duration,
    run: fn(&SuiteConfig) -> PropertyResult,
}

fn main() -> ExitCode {
    let seed = std::env::var("PTSM_ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_241_016);
    let cfg = SuiteConfig {
        seed,
        ..SuiteConfig::default()
    };
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            id: 1,
            title: "fixture replay at depth 2 and 3",
            limit: secs(1),
            run: |_| suite::fixture_replay(),
        },
        Criterion {
            id: 2,
            title: "W = K = G on random pairs, witnesses within 1/64",
            limit: secs(300),
            run: suite::coincidence,
        },
        Criterion {
            id: 3,
            title: "zero duality gap on random instances",
            limit: secs(60),
            run: suite::duality,
        },
        Criterion {
            id: 4,
            title: "game synthesis bracket and checker agreement",
            limit: secs(300),
            run: suite::game_bracket,
        },
        Criterion {
            id: 5,
            title: "non-expansivity of formulas and <>",
            limit: secs(300),
            run: suite::nonexpansivity,
        },
        Criterion {
            id: 6,
            title: "translation, locality, unravelling, injections",
            limit: secs(120),
            run: suite::structural,
        },
        Criterion {
            id: 7,
            title: "density of formulas among price functions",
            limit: secs(300),
            run: suite::density,
        },
    ];

    println!("acceptance (seed {seed})");
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)(&cfg);
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let ok = result.passed && in_time;
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] criterion {}: {} ({}; {:.2}s, limit {}s){}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            result.detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            if in_time { "" } else { " over time limit" },
        );
        if let Some(cx) = &result.counterexample {
            println!("    counterexample: {cx}");
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
