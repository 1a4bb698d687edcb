use std::path::Path;
use std::process::{Command, Output};

fn maropf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maropf"))
        .args(args)
        .env_remove("MAROPF_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn cases_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../cases"))
}

#[test]
fn solve_writes_artifacts_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let dump = dir.path().join("program.txt");
    let case = cases_dir().join("case2.json");
    let o = maropf(&[
        "solve",
        "--case",
        case.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--dump-program",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("feasible true"), "{}", stdout(&o));
    for f in ["solution.json", "iterations.csv", "report.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("conic-program v1"));

    let v = maropf(&[
        "validate",
        "--case",
        case.to_str().unwrap(),
        "--solution",
        out.join("solution.json").to_str().unwrap(),
    ]);
    assert!(v.status.success(), "{}", stderr(&v));
    let report: serde_json::Value = serde_json::from_str(&stdout(&v)).unwrap();
    assert_eq!(report["feasible"], true);
}

#[test]
fn tolerance_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_maropf"))
        .args(["solve", "--case", "bundled:case2", "--method", "ropf", "--out"])
        .arg(dir.path())
        .env("MAROPF_TOL", "not-a-number")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("not-a-number"), "{}", stderr(&o));
}

#[test]
fn check_conditions_prints_report() {
    let o = maropf(&["check-conditions", "--case", "bundled:case34like"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["c1"], true);
    assert!(report["e_norm"].as_f64().unwrap() < 1.0);
}

#[test]
fn run_compares_methods() {
    let dir = tempfile::tempdir().unwrap();
    let o = maropf(&[
        "run",
        "--case",
        "bundled:case5-highpv",
        "--methods",
        "maropf,ropf",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(dir.path().join("ropf/report.json").is_file());
}

#[test]
fn run_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "case": "bundled:case2",
            "methods": ["relaxed-linear"],
            "out_dir": out,
        })
        .to_string(),
    )
    .unwrap();
    let o = maropf(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("relaxed-linear/solution.json").is_file());
}

#[test]
fn missing_case_reports_load_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = maropf(&[
        "run",
        "--case",
        "/does/not/exist.json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("load stage"), "{}", stderr(&o));
}

#[test]
fn gen_is_deterministic() {
    let a = maropf(&["gen", "--seed", "7", "--nodes", "12", "--steps", "4"]);
    let b = maropf(&["gen", "--seed", "7", "--nodes", "12", "--steps", "4"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let file: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(file["lines"].as_array().unwrap().len(), 11);
}

#[test]
fn unknown_method_is_rejected() {
    let o = maropf(&["solve", "--case", "bundled:case2", "--method", "milp", "--out", "x"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("milp"));
}
