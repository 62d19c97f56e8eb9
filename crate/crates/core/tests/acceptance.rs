//! Runs every verification suite and prints one PASS/FAIL line each.
//!
//! Exits nonzero when a check fails that is not listed in
//! `KNOWN_FAILURES`. Known failures are still reported as FAIL; they are
//! claims the engine reproduces faithfully and finds to be false at this
//! scale.

use std::process::ExitCode;

use pricewars::verify::{run_suite, DEFAULT_SEED, SUITES};

/// `(suite id, check name)` pairs expected to fail.
const KNOWN_FAILURES: &[(u8, &str)] = &[
    // after seller s resets to pricing at value the V-item is still priced
    // below V, so it sells on the s − 1 following steps too: 9/41 > 1/5
    (11, "V-item bought exactly after the first seller moves"),
    (11, "fraction of steps with V bought ≤ 1/s"),
];

fn main() -> ExitCode {
    let seed = std::env::var("PRICEWARS_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut unexpected = 0;
    for &(id, name, _) in SUITES {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let report = match run_suite(name, seed) {
            Ok(r) => r,
            Err(e) => {
                println!("FAIL [{id}] {name}: error: {e}");
                unexpected += 1;
                continue;
            }
        };
        println!("{}", report.line());
        for c in &report.checks {
            let known = KNOWN_FAILURES.contains(&(id, c.name.as_str()));
            match (c.passed, known) {
                (false, false) => unexpected += 1,
                (false, true) => println!("    (known failure: {})", c.name),
                (true, true) => println!("    note: known failure now passes: {}", c.name),
                (true, false) => {}
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
