//! One line per acceptance criterion, then a hard failure if any missed.

use quadprop::validation::{determinism, run_validation, ValidationConfig};

#[test]
fn acceptance() {
    let config = ValidationConfig::default();
    let report = run_validation(&config).expect("suite runs");
    let mut lines: Vec<String> = report.criteria.iter().map(|c| c.line()).collect();
    let det = determinism(&config).expect("suite runs twice");
    lines.push(det.line());
    // Start on a fresh line; the harness has already printed the test name.
    println!();
    for l in &lines {
        println!("{l}");
    }
    let failed: Vec<u32> = report.criteria.iter().chain([&det]).filter(|c| !c.passed).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
