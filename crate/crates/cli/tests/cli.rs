use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "\
NAME tiny
OBJSENSE
    MAX
ROWS
 N obj
 L cap
COLUMNS
    MARKER 'MARKER' 'INTORG'
    x1 obj 1 cap 2
    x2 obj 1 cap 2
    x3 obj 1 cap 2
    MARKER 'MARKER' 'INTEND'
RHS
    rhs cap 3
BOUNDS
 UP bnd x1 1
 UP bnd x2 1
 UP bnd x3 1
ENDATA
";

const INF: &str = "\
NAME inf
ROWS
 N obj
 G a
 L b
COLUMNS
    MARKER 'MARKER' 'INTORG'
    x1 a 1 b 1
    x2 a 1 b 1
    MARKER 'MARKER' 'INTEND'
RHS
    rhs a 2 b 1
BOUNDS
 UP bnd x1 1
 UP bnd x2 1
ENDATA
";

fn confmip(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confmip")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .map(str::trim)
        .unwrap_or_else(|| panic!("no {key} line in\n{text}"))
}

#[test]
fn tiny_knapsack_has_objective_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.mps"), TINY).unwrap();
    let out = confmip(&["solve", "tiny.mps", "--mode", "combined", "--stats-json", "s.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(field(&text, "status"), "optimal");
    assert_eq!(field(&text, "objective").parse::<f64>().unwrap(), 1.0);

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["status"], "optimal");
    assert_eq!(json["mode"], "combined");
    assert!(json["stats"]["pool"]["inserted"].is_u64());
}

#[test]
fn contradictory_pair_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("inf.mps"), INF).unwrap();
    for mode in ["none", "conflict", "dualray", "combined", "combined-pool"] {
        let out = confmip(&["solve", "inf.mps", "--mode", mode], dir.path());
        assert!(out.status.success());
        assert_eq!(field(&stdout(&out), "status"), "infeasible");
    }
}

#[test]
fn bench_writes_one_row_per_instance_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.mps"), TINY).unwrap();
    fs::write(dir.path().join("inf.mps"), INF).unwrap();
    let gen = confmip(&["generate", "markshare-like", "--size", "8", "--seed", "1", "--out", "ms.mps"], dir.path());
    assert!(gen.status.success());
    let out = confmip(
        &["bench", ".", "--modes", "conflict,dualray,combined,combined-pool", "--out", "results.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 4);
    for name in ["tiny", "inf", "markshare-like-8-1"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{name},"))).count(), 4);
    }

    let sum = confmip(&["summarize", "results.csv", "--no-filter"], dir.path());
    assert!(sum.status.success());
    let text = stdout(&sum);
    let base = text.lines().find(|l| l.starts_with("conflict ")).unwrap();
    assert!(base.split_whitespace().rev().take(2).all(|v| v == "1.000"), "{base}");

    let missing = confmip(&["summarize", "results.csv", "--base", "none"], dir.path());
    assert!(!missing.status.success());
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.mps", "b.mps"] {
        let o = confmip(&["generate", "bin-packing-infeasible", "--size", "4", "--seed", "7", "--out", out], dir.path());
        assert!(o.status.success());
    }
    let a = fs::read(dir.path().join("a.mps")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.mps")).unwrap());
    let solved = confmip(&["solve", "a.mps"], dir.path());
    assert_eq!(field(&stdout(&solved), "status"), "infeasible");
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.mps"), TINY).unwrap();
    fs::write(dir.path().join("junk.mps"), "ROWS\n X bad\n").unwrap();
    for args in [
        vec!["solve", "missing.mps"],
        vec!["solve", "junk.mps"],
        vec!["solve", "tiny.mps", "--bogus"],
        vec!["solve", "tiny.mps", "--mode", "fancy"],
        vec!["solve", "tiny.mps", "--time-limit", "-1"],
        vec!["generate", "markshare-like", "--size", "1000", "--out", "x.mps"],
        vec!["generate", "knapsack", "--size", "4", "--out", "x.mps"],
    ] {
        let o = confmip(&args, dir.path());
        assert!(!o.status.success(), "{args:?} succeeded");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn time_limit_still_reports_stats() {
    let dir = tempfile::tempdir().unwrap();
    let gen = confmip(&["generate", "markshare-like", "--size", "40", "--seed", "0", "--out", "big.mps"], dir.path());
    assert!(gen.status.success());
    let out = confmip(&["solve", "big.mps", "--node-limit", "5", "--stats-json", "s.json"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(field(&text, "status"), "limit");
    assert!(text.contains("conflict statistics"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "limit");
}
