use std::fs;

use certground::report::SandwichReport;
use certground_cli::{run_with, EXIT_INVALID, EXIT_OK, EXIT_SOLVER};
use serde_json::Value;

const E_MIN: f64 = 0.5 - 2.0 * std::f64::consts::LN_2;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("certground").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, EXIT_OK, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn anderson_row_has_everything() {
    let v = json(&["anderson", "--model", "heisenberg", "--m", "3"]);
    assert_eq!(v["method"], "anderson");
    assert_eq!(v["kind"], "lower");
    assert_eq!(v["certified"], true);
    assert_eq!(v["params"]["m"], 3);
    assert_eq!(v["params"]["D"], 1);
    assert!((v["estimate"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    assert!((v["guarantee_width"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-9);
    assert!(v["diagnostics"]["residual"].is_number());
    assert!(v["diagnostics"]["seconds"].is_number());
}

#[test]
fn anderson_fifteen() {
    let v = json(&["anderson", "--model", "heisenberg", "--m", "15", "--dim", "1"]);
    let a = v["estimate"].as_f64().unwrap();
    assert!((a + 0.916702927399).abs() < 1e-9);
    let eps = v["guarantee_width"].as_f64().unwrap();
    assert!(a <= E_MIN && E_MIN <= a + eps);
}

#[test]
fn sweep_csv_has_fourteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let (code, _, err) = run(&[
        "sweep", "--method", "anderson", "--model", "heisenberg", "--m", "2..15", "--csv",
        path.to_str().unwrap(), "--out", dir.path().join("sweep.json").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 15);
    assert!(lines[0].starts_with("model,D,m,lambda_min_patch,bound,certified_bound"));
    for (i, line) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[2], (i + 2).to_string());
        let bound: f64 = cells[4].parse().unwrap();
        assert!(bound <= E_MIN + 1e-9);
    }
}

#[test]
fn sweep_order_does_not_depend_on_jobs() {
    let args = |jobs: &'static str| {
        run(&["sweep", "--method", "anderson", "--m", "2..9", "--jobs", jobs, "--format", "csv", "--no-timing"])
    };
    let (c1, one, _) = args("1");
    let (c4, four, _) = args("4");
    assert_eq!((c1, c4), (EXIT_OK, EXIT_OK));
    assert_eq!(one, four);
}

#[test]
fn empty_sweep_is_header_only() {
    // every point has 2s > m and is skipped
    let (code, out, err) = run(&["sweep", "--method", "marginal", "--m", "2", "--s", "2", "--format", "csv"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out, "model,m,s,mode,placement,z,density_bound,gap,seconds\n");
}

#[test]
fn marginal_sweep_rows() {
    let v = json(&["sweep", "--method", "marginal", "--m", "4", "--s", "1..2", "--no-timing"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["certified"], true);
        assert_eq!(r["params"]["mode"], "consecutive");
        assert!(r["diagnostics"]["gap"].is_number());
        assert!(r["value"].as_f64().unwrap() <= E_MIN + 1e-7);
    }
}

#[test]
fn sandwich_roundtrip_and_determinism() {
    let args = [
        "sandwich", "--model", "heisenberg", "--anderson-m", "12", "--moment-l", "3", "--marginal", "m=5,s=2",
        "--ring-n", "8", "--no-timing",
    ];
    let (code, a, err) = run(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    let (_, b, _) = run(&args);
    assert_eq!(a, b);
    let report: SandwichReport = serde_json::from_str(&a).unwrap();
    assert_eq!(report.rows.len(), 5);
    let lower = report.lower.unwrap();
    let upper = report.upper.unwrap();
    assert!(lower <= E_MIN && E_MIN <= upper);
    assert_eq!(report.upper_method.as_deref(), Some("product_upper"));
    assert!(report.reference.is_some());
    let reference_row = report.rows.iter().find(|r| r.method == "ring_reference").unwrap();
    assert!(!reference_row.certified);
    assert_eq!(reference_row.extras["note"], "reference, not certified");
}

#[test]
fn output_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let (code, out, _) =
        run(&["moment", "--l", "2", "--model", "xxz", "--params", "0.5", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let text = fs::read_to_string(path).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "xxz");
    assert_eq!(row[1], "2");
    assert_eq!(row[2], "12");
    assert!((row[4].parse::<f64>().unwrap() + 1.25).abs() < 1e-6);
}

#[test]
fn dump_sdp() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.dat-s");
    let (code, _, err) = run(&["marginal", "--m", "3", "--s", "1", "--dump-sdp", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('*'));
    let m: usize = lines.next().unwrap().trim().parse().unwrap();
    assert!(m > 0);
    assert_eq!(lines.next().unwrap().trim(), "2");
}

#[test]
fn model_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zz.json");
    fs::write(&path, r#"{"name": "zz", "d": 2, "D": 1, "term": {"pauli_sum": [{"paulis": "ZZ", "coeff": 1.0}]}}"#).unwrap();
    let v = json(&["moment", "--model-file", path.to_str().unwrap(), "--l", "2"]);
    assert!((v["value"].as_f64().unwrap() + 1.0).abs() < 1e-6);
}

#[test]
fn models_and_oracle() {
    let v = json(&["models"]);
    let names: Vec<&str> = v["models"].as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["heisenberg", "xxz", "tfim", "random_twosite"]);
    let v = json(&["oracle", "--n", "2..4"]);
    let rows = v["rows"].as_array().unwrap();
    assert!((rows[0]["ring_density"].as_f64().unwrap() + 1.5).abs() < 1e-10);
    assert!((rows[2]["ring_density"].as_f64().unwrap() + 1.0).abs() < 1e-10);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["anderson", "--m", "3", "--model", "nope"]).0, EXIT_INVALID);
    assert_eq!(run(&["anderson"]).0, EXIT_INVALID);
    assert_eq!(run(&["marginal", "--m", "4", "--s", "3"]).0, EXIT_INVALID);
    assert_eq!(run(&["sweep", "--method", "nope", "--m", "2"]).0, EXIT_INVALID);
    assert_eq!(run(&["sweep", "--method", "anderson", "--m", "5..2"]).0, EXIT_INVALID);
    assert_eq!(run(&["anderson", "--m", "3", "--gap-tol", "-1"]).0, EXIT_INVALID);
    let (code, _, err) = run(&["anderson", "--m", "14", "--tol", "1e-300"]);
    assert_eq!(code, EXIT_SOLVER);
    assert!(err.contains("did not converge"));
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn failed_sweep_points_keep_parameters() {
    // m = 1 is invalid for the patch bound, m = 3 is fine
    let (code, out, _) = run(&["sweep", "--method", "anderson", "--m", "1,3", "--format", "csv", "--no-timing"]);
    assert_eq!(code, EXIT_INVALID);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "heisenberg,1,1,,,,,,");
    assert!(lines[2].starts_with("heisenberg,1,3,-2,"));
}
