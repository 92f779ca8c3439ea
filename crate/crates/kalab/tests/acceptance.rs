//! The acceptance gate: runs every criterion of the suite at its stated
//! tolerance and prints one pass/fail line per criterion. Any failed
//! criterion fails this test.

use kalab::selftest;

#[test]
fn acceptance_criteria() {
    let master = std::env::var("KA_MASTER_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(selftest::DEFAULT_MASTER_SEED);
    let report = selftest::run(master);
    for c in &report.criteria {
        println!("{}", c.format_line());
    }
    println!(
        "overall: {} (master seed {}, digest {})",
        if report.all_passed { "PASS" } else { "FAIL" },
        report.master_seed,
        report.hash
    );
    let failed: Vec<String> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("criterion {}: {} - {}", c.id, c.name, c.detail))
        .collect();
    assert!(report.all_passed, "failed criteria:\n{}", failed.join("\n"));
}
