use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gpq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpq")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).display().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn points_table_to_stdout() {
    let out = gpq(&["points", "--config", &config("points.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,index,xi1,xi2,weight"));
    assert!(lines.next().unwrap().starts_with("UT,0,0.00000000000e0,0.00000000000e0,3.33333333333e-1"));
}

#[test]
fn json_output_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("w.json");
    let out = gpq(&[
        "weights",
        "--config",
        &config("weights_ut.json"),
        "--format",
        "json",
        "--out",
        dest.to_str().unwrap(),
        "--seed-offset",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(v["experiment"], "weights");
    assert_eq!(v["metadata"]["seed_offset"], 3);
    assert_eq!(v["metadata"]["config"]["experiment"], "weights");
    let w = v["rows"][0]["weight"].as_f64().unwrap();
    assert!((w - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn tracking_reports_are_reproducible() {
    let run = |offset: &str| gpq(&["ungm", "--config", &config("ungm_smoke.json"), "--seed-offset", offset]).stdout;
    let first = run("0");
    assert!(!first.is_empty());
    assert_eq!(first, run("0"));
    assert_ne!(first, run("1"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = write(dir.path(), "bad.json", "{ not json");
    let unknown = write(dir.path(), "unknown.json", r#"{"experiment": "points", "dim": 2, "colour": 1, "methods": [{"points": {"type": "cubature"}}]}"#);
    let cases: Vec<Vec<String>> = vec![
        vec!["points".into(), "--config".into(), dir.path().join("missing.json").display().to_string()],
        vec!["points".into(), "--config".into(), bad_json],
        vec!["points".into(), "--config".into(), unknown],
        vec!["ungm".into(), "--config".into(), config("points.json")],
        vec!["points".into(), "--config".into(), config("points.json"), "--format".into(), "xml".into()],
        vec!["frobnicate".into()],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = gpq(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn numerical_failure_in_every_method_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "singular.json",
        r#"{"experiment": "transform",
            "transform": {"mean": [0, 0], "cov": [[1, 0], [0, 1]], "function": {"type": "polar"}},
            "methods": [{"points": {"type": "ut", "kappa": 1}, "kernel": {"type": "gauss_hermite", "order": 1}}]}"#,
    );
    let out = gpq(&["transform", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("error: "));
}

#[test]
fn help_exits_zero() {
    assert_eq!(gpq(&["--help"]).status.code(), Some(0));
}
