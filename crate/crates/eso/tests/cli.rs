use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eso::reports::parse_prob_matrix_csv;
use eso_core::{ProbMatrix, ProbMethod, SamplingSpec};
use tempfile::TempDir;

const MATRIX: &str = "% 4x5 fixture\n4 5 8\n1 1 1.0\n1 2 1.0\n2 2 2.0\n2 3 -1.0\n3 4 0.5\n3 5 1.5\n4 1 1.0\n4 5 -2.0\n";
const TAU_NICE: &str = r#"{"kind":"tau_nice","n":5,"tau":2}"#;

fn eso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eso")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn compute_v_reports_certified_parameters() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "a.txt", MATRIX);
    let o = eso(&["compute-v", "--matrix", s(&m), "--sampling", TAU_NICE]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["command"], "compute-v");
    assert_eq!(json["formula_id"], "TAU_NICE");
    assert_eq!(json["v"].as_array().unwrap().len(), 5);
    assert!(json["certificate_margin"].as_f64().unwrap() >= -1e-8);
}

#[test]
fn malformed_matrix_line_is_named() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "bad.txt", "2 2 2\n1 1 1.0\n2 x 1.0\n");
    let o = eso(&["compute-v", "--matrix", s(&m), "--sampling", r#"{"kind":"tau_nice","n":2,"tau":1}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn formula_for_another_kind_is_unsupported() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "a.txt", MATRIX);
    let o = eso(&["compute-v", "--matrix", s(&m), "--sampling", r#"{"kind":"serial","n":5}"#, "--formula", "ctau"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn verify_accepts_certified_v_and_rejects_half_of_it() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "a.txt", MATRIX);
    let report = dir.path().join("v.json");
    let o = eso(&["compute-v", "--matrix", s(&m), "--sampling", TAU_NICE, "--out", s(&report)]);
    assert_eq!(o.status.code(), Some(0));
    let o = eso(&["verify", "--matrix", s(&m), "--sampling", TAU_NICE, "--v", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let half: Vec<f64> = json["v"].as_array().unwrap().iter().map(|x| 0.5 * x.as_f64().unwrap()).collect();
    let half_path = write(&dir, "half.json", &serde_json::to_string(&half).unwrap());
    let o = eso(&["verify", "--matrix", s(&m), "--sampling", TAU_NICE, "--v", s(&half_path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("witness"), "{}", stderr(&o));
    let out: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(out["pass"], false);
    assert!(out["certificate"]["witness"].is_array());
}

#[test]
fn enumerated_probability_matrix_matches_closed_form() {
    let spec = r#"{"kind":"ctau_distributed","partition":[[1,2,3],[4,5,6]],"tau":2}"#;
    let o = eso(&["probmatrix", "--sampling", spec, "--method", "enumerate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# prob_matrix n=6 provenance=enumerated"));
    let got = parse_prob_matrix_csv(&text).unwrap();
    let closed =
        ProbMatrix::compute(&SamplingSpec::ctau_distributed(vec![vec![0, 1, 2], vec![3, 4, 5]], 2), ProbMethod::ClosedForm)
            .unwrap();
    assert!(got.max_abs_diff(&closed.matrix) <= 1e-12);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "a.txt", MATRIX);
    let problem = write(&dir, "p.json", r#"{"lambda":0.1}"#);
    let run = |threads: &str| {
        let o = eso(&[
            "solve", "--matrix", s(&m), "--problem", s(&problem), "--sampling", TAU_NICE, "--runs", "4", "--seed", "7",
            "--threads", threads,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    let first = run("1");
    assert_eq!(first, run("1"));
    assert_eq!(first, run("4"));

    let v = write(&dir, "v1.json", "[3,3,3,3,3]");
    let mc = || {
        eso(&["verify", "--matrix", s(&m), "--sampling", TAU_NICE, "--v", s(&v), "--mode", "monte-carlo", "--trials", "20000"])
            .stdout
    };
    assert_eq!(mc(), mc());
}

#[test]
fn battery_writes_junit() {
    let dir = TempDir::new().unwrap();
    let junit = dir.path().join("battery.xml");
    let o = eso(&["battery", "--seeds", "1,2", "--sizes", "3,4", "--specs-per-size", "5", "--junit", s(&junit)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let xml = std::fs::read_to_string(&junit).unwrap();
    assert!(xml.contains("<testsuite") && !xml.contains("<failure"));
}

#[test]
fn tradeoff_and_design_serial_run() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "a.txt", MATRIX);
    let o = eso(&["tradeoff", "--matrix", s(&m), "--sampling", TAU_NICE, "--formulas", "conservative,generic,coupled-power"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    let problem = write(&dir, "p.json", r#"{"lambda":0.5,"b":[1,0,1,0,1]}"#);
    let o = eso(&["design-serial", "--matrix", s(&m), "--problem", s(&problem)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(json["c_opt"].as_f64().unwrap() <= json["c_unif"].as_f64().unwrap() * (1.0 + 1e-12));
}
