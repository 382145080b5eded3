use std::path::Path;
use std::process::{Command, Output};

use ratekit::builtins::builtin;
use ratekit::scenario::Num;

fn ratekit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratekit")).args(args).arg("--out").arg(out).output().unwrap()
}

fn write_scenario(dir: &Path, s: &ratekit::Scenario) -> String {
    let p = dir.join("scenario.json");
    std::fs::write(&p, serde_json::to_string_pretty(s).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn alpha_outside_window_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ratekit(&["validate", "builtin:sn1d", "--alpha", "0.8"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("compactification window"), "{err}");
}

#[test]
fn missing_scenario_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ratekit(&["validate", "/nonexistent/scenario.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fold_scenario_has_no_future_sink_for_rate_search() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ratekit(&["find-rc", "builtin:fold-btip"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn expect_tipping_without_tipping() {
    let tmp = tempfile::tempdir().unwrap();
    let s = builtin("sn1d").unwrap().with_constant("lmax", 1.5).unwrap();
    let path = write_scenario(tmp.path(), &s);
    let out = tmp.path().join("out");
    let o = ratekit(&["find-rc", &path, "--expect-tipping"], &out);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    // the report is still written
    assert!(out.join("tipping_report.json").exists());
}

#[test]
fn sink_seed_on_a_saddle() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = builtin("sn1d").unwrap();
    s.seeds.sink = vec![Num::from(1.0)];
    let path = write_scenario(tmp.path(), &s);
    let o = ratekit(&["find-rc", &path], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn scan_writes_contours() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ratekit(&["scan", "builtin:sn1d"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["instability_scan.csv", "scan.svg", "scan_report.json"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let svg = std::fs::read_to_string(tmp.path().join("scan.svg")).unwrap();
    assert!(svg.contains("<line") || svg.contains("<path") || svg.contains("<polyline"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("scan_report.json")).unwrap()).unwrap();
    assert!(report.is_object());
}

#[test]
fn zero_jobs_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ratekit(&["diagram", "builtin:sn1d", "--jobs", "0"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
