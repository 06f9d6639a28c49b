use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heatlab::report::VerificationReport;

fn heatlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatlab")).args(args).output().expect("binary runs")
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn mehler_scenario_passes_with_unit_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"space": [{"k": -2, "a": 0}], "points": [[0], [1]], "times": [0.3], "exponents": [2], "checks": ["contraction"]}"#,
    );
    let out = heatlab(&["run", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: VerificationReport = serde_json::from_slice(&out.stdout).unwrap();
    let ratio = report.entries[0].detail.as_ref().unwrap()["ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 1e-4);
    assert!(report.is_consistent());
}

#[test]
fn every_check_round_trips_into_the_report() {
    for (file, dim) in [("ou_line.json", 1), ("flat_line.json", 1), ("mehler_line.json", 1), ("plane.json", 2)] {
        let dir = tempfile::tempdir().unwrap();
        let out_path = dir.path().join("r.json");
        let out = heatlab(&["run", scenario_path(file).to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
        assert!(matches!(out.status.code(), Some(0 | 1)), "{file}: {}", String::from_utf8_lossy(&out.stderr));
        let report: VerificationReport = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
        let declared: Vec<String> = serde_json::from_value(report.metadata["checks"].clone()).unwrap();
        for name in &declared {
            assert!(report.entries.iter().any(|e| &e.check == name), "{file}: no entry for {name}");
        }
        assert!(report.entries.iter().all(|e| declared.contains(&e.check)));
        assert!(report.entries.iter().all(|e| e.space.len() == dim));
        assert_eq!(out.status.code(), Some(if report.all_pass() { 0 } else { 1 }));
    }
}

#[test]
fn reports_are_byte_stable() {
    let path = scenario_path("plane.json");
    let a = heatlab(&["run", path.to_str().unwrap()]);
    let b = heatlab(&["run", path.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.json", "{\"space\": [");
    assert_eq!(heatlab(&["run", broken.to_str().unwrap()]).status.code(), Some(2));
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"space": [{"k": 0, "a": 0}], "points": [[0], [1]], "times": [1], "checks": ["contraction", "sharpness"]}"#,
    );
    let out = heatlab(&["run", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checks[1]"));
    assert_eq!(heatlab(&["run", "/nonexistent/scenario.json"]).status.code(), Some(2));
    assert_eq!(heatlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(heatlab(&["sweep", "contraction", "--k", ""]).status.code(), Some(2));
}

#[test]
fn violations_exit_with_one() {
    // no violation is expected on the flat line, so a silent probe passes
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "kn.json",
        r#"{"space": [{"k": 0, "a": 0}], "points": [[0], [1]], "times": [0.5], "checks": ["kn-probe"], "kn": {"n": 10, "a_max": 5},
            "tolerances": {"kn-probe": 1e-4}}"#,
    );
    assert_eq!(heatlab(&["run", s.to_str().unwrap()]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "evi.json",
        r#"{"space": [{"k": 1, "a": 0}], "points": [[1.5], [0]], "times": [1.0], "checks": ["functional-inequalities"]}"#,
    );
    // the EVI as stated (distance to f_t m) fails on this pair
    assert_eq!(heatlab(&["run", s.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn contraction_sweep_writes_ten_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let out = heatlab(&["sweep", "contraction", "--k", "1", "--t", "0.1:1:10", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "check,k,a,t,x,y,p,lhs,rhs,gap,pass");
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let (lhs, rhs): (f64, f64) = (rec[7].parse().unwrap(), rec[8].parse().unwrap());
        assert!((lhs / rhs - 1.0).abs() < 1e-4);
        assert_eq!(&rec[10], "true");
        rows += 1;
    }
    assert_eq!(rows, 10);
    let again = heatlab(&["sweep", "contraction", "--k", "1", "--t", "0.1:1:10"]);
    assert_eq!(again.stdout, text.as_bytes());
}

#[test]
fn gradient_sweep_over_model_lines() {
    let out = heatlab(&["sweep", "gradient", "--k", "-2,0,1", "--p", "inf"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn report_converts_to_csv_and_back() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("r.json");
    heatlab(&["run", scenario_path("mehler_line.json").to_str().unwrap(), "--out", json_path.to_str().unwrap()]);
    let out = heatlab(&["report", json_path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let report: VerificationReport = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(text.lines().count(), report.entries.len() + 1);
    assert!(text.starts_with("check,k,a,t,x,y,p,lhs,rhs,gap,pass\n"));
    let out = heatlab(&["report", json_path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.stdout, fs::read(&json_path).unwrap());
    let bogus = write(dir.path(), "bogus.json", "[1, 2]");
    assert_eq!(heatlab(&["report", bogus.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(heatlab(&["report", json_path.to_str().unwrap(), "--format", "xml"]).status.code(), Some(2));
}
