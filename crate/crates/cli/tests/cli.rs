use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lipfree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipfree"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_one_diamond_has_six_points_at_pole_distance_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = lipfree(dir.path(), &["gen", "--alpha", "1", "--branches", "4", "--out", "s.json"]);
    assert!(o.status.success());
    let file: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(file["labels"].as_array().unwrap().len(), 6);
    let o = lipfree(dir.path(), &["dist", "--space", "s.json", "top", "bottom"]);
    assert_eq!(stdout(&o).trim(), "2/1");
}

#[test]
fn norm_of_a_molecule_is_one_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("m.json"),
        r#"{"format":"lipfree-vector/1","space":{"diamond":{"alpha":"2","branches":3,"limit_width":1}},
            "entries":[["top","1/2"],["bottom","-1/2"]]}"#,
    )
    .unwrap();
    let o = lipfree(dir.path(), &["norm", "m.json", "--out", "c.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().next(), Some("1/1"));
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(cert["value"], "1/1");
    assert_eq!(cert["potential"]["domain"], "total");
}

#[test]
fn game_then_verify_passes_and_tampering_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = lipfree(
        dir.path(),
        &["game", "--alpha", "2", "--branches", "4", "--depth", "2", "--adversary", "adaptive_dual", "--seed", "7", "--out", "t.json"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = lipfree(dir.path(), &["verify", "t.json", "--oracle"]);
    assert!(o.status.success(), "{}", stdout(&o));

    let text = fs::read_to_string(dir.path().join("t.json")).unwrap();
    let tampered = text.replacen("\"-1/2\"", "\"-3/4\"", 1);
    assert_ne!(tampered, text);
    fs::write(dir.path().join("bad.json"), tampered).unwrap();
    let o = lipfree(dir.path(), &["verify", "bad.json", "--report", "r.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL root"));
    assert!(fs::read_to_string(dir.path().join("r.json")).unwrap().contains("\"fail: "));
}

#[test]
fn identical_seeds_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let o = lipfree(dir.path(), &["game", "--alpha", "1", "--branches", "5", "--depth", "1", "--seed", "3", "--out", name]);
        assert!(o.status.success());
    }
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn extend_fills_a_partial_function() {
    let dir = tempfile::tempdir().unwrap();
    lipfree(dir.path(), &["gen", "--alpha", "1", "--branches", "3", "--out", "s.json"]);
    fs::write(
        dir.path().join("f.json"),
        r#"{"format":"lipfree-function/1","space":{"file":"s.json"},"domain":"partial",
            "values":[["top","1/1"],["mid1","0/1"]]}"#,
    )
    .unwrap();
    let o = lipfree(dir.path(), &["extend", "f.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(g["domain"], "total");
    assert_eq!(g["values"].as_array().unwrap().len(), 5);

    fs::write(
        dir.path().join("steep.json"),
        r#"{"format":"lipfree-function/1","space":{"file":"s.json"},"domain":"partial",
            "values":[["top","3/1"],["mid1","0/1"]]}"#,
    )
    .unwrap();
    assert_eq!(lipfree(dir.path(), &["extend", "steep.json"]).status.code(), Some(1));
}

#[test]
fn exit_codes_distinguish_usage_budget_and_failure() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| lipfree(dir.path(), args).status.code();
    assert_eq!(code(&["gen", "--alpha", "1", "--branches", "3", "--eta-typo"]), Some(2));
    assert_eq!(code(&["game", "--alpha", "1", "--depth", "1", "--eta", "0.05"]), Some(2));
    assert_eq!(code(&["gen", "--alpha", "w^2", "--branches", "4", "--budget-points", "1000"]), Some(3));
    assert_eq!(code(&["game", "--alpha", "1", "--branches", "2", "--depth", "1"]), Some(1));
    assert_eq!(code(&["verify", "missing.json"]), Some(2));
}

#[test]
fn decomp_reports_constants_and_partition() {
    let dir = tempfile::tempdir().unwrap();
    let o = lipfree(
        dir.path(),
        &["decomp", "--alpha", "w", "--branches", "3", "--limit-width", "3", "--count", "5", "--out", "p.json", "--report", "r.json"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["covers"], true);
    assert_eq!(r["additivity_failures"], 0);
    let p: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(p["summands"].as_array().unwrap().len(), 3);
    assert_eq!(lipfree(dir.path(), &["decomp", "--alpha", "2"]).status.code(), Some(2));
}

#[test]
fn quick_suite_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let o = lipfree(dir.path(), &["suite", "--quick", "--seed", "5", "--report", name]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read_to_string(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.json")).unwrap());
    assert!(a.contains("\"verdict\": \"pass\""));
}

#[test]
fn suite_with_two_branches_fails_the_escape() {
    let dir = tempfile::tempdir().unwrap();
    let o = lipfree(dir.path(), &["suite", "--quick", "--branches", "2", "--report", "r.json"]);
    assert_eq!(o.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let escape = r["checks"].as_array().unwrap().iter().find(|c| c["id"] == "escape").unwrap();
    assert_eq!(escape["status"], "fail");
    assert!(escape["details"].as_str().unwrap().contains("at least 3 branches"));
}
