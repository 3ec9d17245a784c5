//! Acceptance criteria at full size. Each test prints one line:
//! `[PASS] <id>: <details>` or `[FAIL] <id>: <details>`.

use lipfree::suite::{run_check, Status, SuiteConfig};

fn criterion(number: usize, id: &str) {
    let config = SuiteConfig {
        timings: true,
        ..SuiteConfig::default()
    };
    let r = run_check(id, &config).expect("known check id");
    let tag = match r.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Skip => "SKIP",
    };
    println!(
        "[{tag}] criterion {number} {id} ({} ms): {}",
        r.wall_ms.unwrap_or(0),
        r.details
    );
    assert_eq!(r.status, Status::Pass, "criterion {number} {id}: {}", r.details);
}

#[test]
fn criterion_01_metric_oracle() {
    criterion(1, "metric-oracle");
}

#[test]
fn criterion_02_molecule_norms() {
    criterion(2, "molecule-norms");
}

#[test]
fn criterion_03_isometry() {
    criterion(3, "isometry");
}

#[test]
fn criterion_04_duality_gap() {
    criterion(4, "duality-gap");
}

#[test]
fn criterion_05_escape() {
    criterion(5, "escape");
}

#[test]
fn criterion_06_depth_games() {
    criterion(6, "depth-games");
}

#[test]
fn criterion_07_midpoint() {
    criterion(7, "midpoint");
}

#[test]
fn criterion_08_gluing() {
    criterion(8, "gluing");
}

#[test]
fn criterion_09_decomposition() {
    criterion(9, "decomposition");
}

#[test]
fn criterion_10_determinism() {
    criterion(10, "determinism");
}
