use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morseflow"))
}

fn field_file(dir: &Path, name: &str, dim: usize, expr: &str) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    let body = serde_json::json!({ "dim": dim, "expr": expr, "label": name });
    fs::write(&path, body.to_string()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Corpus {
    dir: TempDir,
    f: PathBuf,
    g: PathBuf,
    well: PathBuf,
}

fn corpus() -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let f = field_file(dir.path(), "f", 2, "x1^2 + x2^2");
    let g = field_file(dir.path(), "g", 2, "-x1^2 - x2^2");
    let well = field_file(dir.path(), "well", 2, "(x1^2 - 1)^2 + x2^2");
    Corpus { dir, f, g, well }
}

#[test]
fn critical_points_of_the_bowl() {
    let c = corpus();
    let v = json(&run(&["critical-points", p(&c.f)]));
    let pts = v["critical_points"].as_array().unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0]["index"], 0);
    assert_eq!(pts[0]["x"], serde_json::json!([0.0, 0.0]));
    assert_eq!(v["degree"], 1);
}

#[test]
fn critical_points_table_of_the_double_well() {
    let c = corpus();
    let out = run(&["critical-points", p(&c.well), "--format", "text"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).collect();
    assert_eq!(rows.len(), 3, "{text}");
    assert!(text.contains("(1.0000000000, 0.0000000000)"));
}

#[test]
fn zero_field_exits_with_code_3() {
    let c = corpus();
    let zero = field_file(c.dir.path(), "zero", 2, "0");
    let out = run(&["critical-points", p(&zero)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("properness"));
    let out = run(&["critical-points", p(&zero), "--assume-proper"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn degenerate_point_exits_with_code_2() {
    let c = corpus();
    let quartic = field_file(c.dir.path(), "flat", 2, "x1^4 + x2^2");
    assert_eq!(run(&["morse", p(&quartic)]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_code_1() {
    let c = corpus();
    assert_eq!(run(&["morse", "/nonexistent/field.json"]).status.code(), Some(1));
    let bad = c.dir.path().join("bad.json");
    fs::write(&bad, r#"{"dim": 2, "expr": "x1^2 +"}"#).unwrap();
    assert_eq!(run(&["morse", p(&bad)]).status.code(), Some(1));
    fs::write(&bad, r#"{"dim": 2, "expr": "x1^2", "extra": 1}"#).unwrap();
    assert_eq!(run(&["morse", p(&bad)]).status.code(), Some(1));
    let cube = field_file(c.dir.path(), "cube", 3, "x1^2 + x2^2 + x3^2");
    assert_eq!(run(&["compare", p(&c.f), p(&cube)]).status.code(), Some(1));
    assert_eq!(run(&["trace", p(&c.f), "--x0", "1,0,0"]).status.code(), Some(1));
}

#[test]
fn invalid_flags_exit_with_code_1() {
    let c = corpus();
    assert_eq!(run(&["morse", p(&c.f), "--tol-newton", "0"]).status.code(), Some(1));
    assert_eq!(run(&["morse", p(&c.f), "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn morse_reports_for_the_model_fields() {
    let c = corpus();
    let f = json(&run(&["morse", p(&c.f)]));
    assert_eq!(f["betti"], serde_json::json!([1, 0, 0]));
    assert_eq!(f["degree"], 1);
    let g = json(&run(&["morse", p(&c.g)]));
    assert_eq!(g["betti"], serde_json::json!([0, 0, 1]));
    assert_eq!(g["degree"], 1);
    let w = json(&run(&["morse", p(&c.well)]));
    assert_eq!(w["betti"], serde_json::json!([1, 0, 0]));
    assert_eq!(w["boundary_matrices"][0], serde_json::json!([[1], [1]]));
}

#[test]
fn compare_verdicts() {
    let c = corpus();
    let v = json(&run(&["compare", p(&c.f), p(&c.g)]));
    assert_eq!(v["proper_homotopic"], true);
    assert_eq!(v["gradient_obstruction"], true);
    assert_eq!(v["gradient_homotopy"], "not_gradient_homotopic");

    let v = json(&run(&["compare", p(&c.f), p(&c.f)]));
    assert_eq!(v["proper_homotopic"], true);
    assert_eq!(v["gradient_obstruction"], false);
    assert_eq!(v["gradient_homotopy"], "inconclusive");

    let v = json(&run(&["compare", p(&c.f), p(&c.well)]));
    assert_eq!(v["proper_homotopic"], true);
    assert_eq!(v["gradient_obstruction"], false);
    assert_eq!(v["gradient_homotopy"], "inconclusive");
}

fn terminal(csv: &str) -> &str {
    csv.lines().last().unwrap().strip_prefix("# terminal=").unwrap()
}

fn last_point(csv: &str) -> Vec<f64> {
    let lines: Vec<&str> = csv.lines().collect();
    lines[lines.len() - 2].split(',').skip(1).map(|s| s.parse().unwrap()).collect()
}

#[test]
fn traces() {
    let c = corpus();
    let out = run(&["trace", p(&c.f), "--x0", "1,0", "--sign", "-1"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("t,x1,x2\n0,1,0\n"));
    assert_eq!(terminal(&csv), "converged:0");

    let out = run(&["trace", p(&c.f), "--x0", "1,0", "--sign", "+1"]);
    assert_eq!(terminal(&String::from_utf8(out.stdout).unwrap()), "escaped");

    let out = run(&["trace", p(&c.well), "--x0", "0.01,0.5"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(terminal(&csv).starts_with("converged:"));
    let end = last_point(&csv);
    assert!((end[0] - 1.0).abs() < 1e-4 && end[1].abs() < 1e-4, "{end:?}");
}

#[test]
fn screen_and_radius() {
    let c = corpus();
    let s = json(&run(&["screen", p(&c.f)]));
    assert_eq!(s["verdict"], "pass");
    assert!((s["minima"][0].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let r = json(&run(&["radius", p(&c.f)]));
    assert_eq!(r["ball"]["r1"], 0.5);
    assert_eq!(r["validation"]["verdict"], "pass");
}

#[test]
fn out_directory_receives_report_pairs() {
    let c = corpus();
    let out_dir = c.dir.path().join("reports");
    let o = p(&out_dir);
    assert!(run(&["morse", p(&c.well), "--out", o]).status.success());
    assert!(run(&["compare", p(&c.f), p(&c.g), "--out", o]).status.success());
    assert!(run(&["trace", p(&c.f), "--x0", "0.5,0.5", "--out", o]).status.success());
    let mut names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["f-g.compare.json", "f-g.compare.txt", "f.trace.csv", "well.morse.json", "well.morse.txt"]
    );
    let text = fs::read_to_string(out_dir.join("well.morse.txt")).unwrap();
    assert!(text.contains("betti  = (1, 0, 0)"));
}

#[test]
fn tolerance_overrides_reach_the_provenance_block() {
    let c = corpus();
    let v = json(&run(&[
        "morse",
        p(&c.well),
        "--tol-newton",
        "1e-11",
        "--tol-degeneracy",
        "1e-7",
        "--tol-step",
        "1e-10",
        "--capture",
        "2e-4",
        "--resolution",
        "32",
        "--grid-density",
        "7",
        "--sphere-samples",
        "100",
        "--seed",
        "9",
    ]));
    let prov = &v["provenance"];
    assert_eq!(prov["newton_tol"], 1e-11);
    assert_eq!(prov["degeneracy_tol"], 1e-7);
    assert_eq!(prov["step_tol"], 1e-10);
    assert_eq!(prov["capture_radius"], 2e-4);
    assert_eq!(prov["resolution"], 32);
    assert_eq!(prov["grid_density"], 7);
    assert_eq!(prov["samples_per_sphere"], 100);
    assert_eq!(prov["seed"], 9);
    assert_eq!(v["validation"]["provenance"]["seed"], 9);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let c = corpus();
    let a = run(&["compare", p(&c.f), p(&c.well)]);
    let b = run(&["compare", p(&c.f), p(&c.well)]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
