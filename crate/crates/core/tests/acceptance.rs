//! Acceptance criteria 1-11, one line each. Exits non-zero if any fails.

use heatdg::verify::{run_suite, Criterion, SUITES};

fn main() {
    let mut results: Vec<Criterion> = Vec::new();
    let mut errors = Vec::new();
    for suite in SUITES {
        match run_suite(suite) {
            Ok(cs) => results.extend(cs),
            Err(e) => errors.push(format!("suite {suite} aborted: {e}")),
        }
    }
    results.sort_by_key(|c| c.id);
    for c in &results {
        println!("{c}");
    }
    for e in &errors {
        println!("{e}");
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    println!("acceptance: {} passed, {} failed, {} suite errors", results.len() - failed, failed, errors.len());
    if failed > 0 || !errors.is_empty() || results.len() != 11 {
        std::process::exit(1);
    }
}
