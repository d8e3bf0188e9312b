//! Report serialization: versioned JSON envelopes, CSV tables and a
//! junit-style summary.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use eso_core::prob_matrix::ProbMatrix;
use eso_core::solver::SolverTrace;
use eso_core::verifier::BatteryReport;
use eso_core::Matrix;
use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON report: schema version, the resolved configuration, then the body.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub config: &'a serde_json::Value,
    #[serde(flatten)]
    pub body: T,
}

pub fn envelope_json<T: Serialize>(command: &str, config: &serde_json::Value, body: T) -> String {
    let env = Envelope { schema_version: SCHEMA_VERSION, command, config, body };
    let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
    s.push('\n');
    s
}

/// Write to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::input(&p.display().to_string(), e)),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| CliError::input("stdout", e))
        }
    }
}

pub fn prob_matrix_csv(p: &ProbMatrix) -> String {
    let n = p.n();
    let mut s = format!("# prob_matrix n={n} provenance={}\n", p.provenance.tag());
    for i in 0..n {
        let row: Vec<String> = p.matrix.row(i).iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_prob_matrix_csv(text: &str) -> Result<Matrix, String> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| {
            l.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| format!("row {}: `{t}` is not a number", k + 1)))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Matrix::from_rows(&rows).map_err(|e| e.to_string())
}

/// `seed,iteration,gap` rows, traces in the given order.
pub fn trace_csv(traces: &[SolverTrace]) -> String {
    let mut s = String::from("seed,iteration,gap\n");
    for t in traces {
        for (k, g) in t.gaps.iter().enumerate() {
            let _ = writeln!(s, "{},{k},{g}", t.seed);
        }
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn junit(report: &BatteryReport, suite: &str) -> String {
    let failures = report.checks.iter().filter(|c| !c.pass).count();
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<testsuite name=\"{}\" tests=\"{}\" failures=\"{failures}\">",
        xml_escape(suite),
        report.checks.len()
    );
    for c in &report.checks {
        let _ = write!(s, "  <testcase classname=\"{}\" name=\"{}\"", xml_escape(suite), xml_escape(&c.name));
        if c.pass {
            s.push_str("/>\n");
        } else {
            let _ = writeln!(
                s,
                ">\n    <failure message=\"max discrepancy {:e} exceeds {:e} over {} cases\"/>\n  </testcase>",
                c.max_discrepancy, c.tolerance, c.cases
            );
        }
    }
    s.push_str("</testsuite>\n");
    s
}

/// Read `v` from a JSON file holding either an array or an object with a
/// `v` field (as written by `compute-v`).
pub fn read_v(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(&path.display().to_string(), e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::input(&path.display().to_string(), e))?;
    let arr = match &value {
        serde_json::Value::Array(_) => &value,
        serde_json::Value::Object(o) => o
            .get("v")
            .ok_or_else(|| CliError::Input(format!("{}: object has no `v` field", path.display())))?,
        _ => return Err(CliError::Input(format!("{}: expected an array or an object with `v`", path.display()))),
    };
    serde_json::from_value(arr.clone()).map_err(|e| CliError::input(&path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use eso_core::{ProbMethod, SamplingSpec};

    #[test]
    fn csv_roundtrip_is_exact() {
        let p = ProbMatrix::compute(&SamplingSpec::tau_nice(5, 2), ProbMethod::Auto).unwrap();
        let text = prob_matrix_csv(&p);
        assert!(text.starts_with("# prob_matrix n=5 provenance=closed_form\n"));
        assert_eq!(parse_prob_matrix_csv(&text).unwrap(), p.matrix);
    }

    #[test]
    fn junit_counts_failures() {
        use eso_core::verifier::BatteryCheck;
        let rep = BatteryReport {
            checks: vec![
                BatteryCheck { name: "a".into(), cases: 3, max_discrepancy: 0.0, tolerance: 1e-12, pass: true },
                BatteryCheck { name: "b<c".into(), cases: 3, max_discrepancy: 1.0, tolerance: 1e-12, pass: false },
            ],
        };
        let x = junit(&rep, "battery");
        assert!(x.contains("tests=\"2\" failures=\"1\""));
        assert!(x.contains("b&lt;c"));
    }
}
