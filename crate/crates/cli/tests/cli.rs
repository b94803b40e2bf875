use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn polyvem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyvem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value of `key=...` in a summary line.
fn field(line: &str, key: &str) -> f64 {
    let prefix = format!("{key}=");
    line.split_whitespace()
        .find_map(|w| w.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
        .trim_end_matches(',')
        .parse()
        .unwrap()
}

fn write_square_mesh(dir: &TempDir) -> std::path::PathBuf {
    let mesh = dir.path().join("m.json");
    let out = polyvem(&["mesh", "--kind", "square-grid", "--n", "4", "--out", path_str(&mesh)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    mesh
}

#[test]
fn square_mesh_has_sixteen_cells_and_records_its_configuration() {
    let dir = TempDir::new().unwrap();
    let mesh = write_square_mesh(&dir);
    let doc = read_json(&mesh);
    assert_eq!(doc["cells"].as_array().unwrap().len(), 16);
    assert_eq!(doc["vertices"].as_array().unwrap().len(), 25);
    assert_eq!(doc["run_config"]["command"], "mesh");
    assert_eq!(doc["run_config"]["mesh"]["kind"], "square-grid");
    assert_eq!(doc["run_config"]["mesh"]["n"], 4);
}

#[test]
fn mesh_summary_goes_to_stderr_when_writing_to_stdout() {
    let out = polyvem(&["mesh", "--kind", "triangle-grid", "--n", "2"]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["cells"].as_array().unwrap().len(), 8);
    assert!(stderr(&out).contains("cells=8"));
}

#[test]
fn perturbed_meshes_are_reproducible_from_the_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    for (path, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let out = polyvem(&[
            "mesh",
            "--kind",
            "perturbed-grid",
            "--n",
            "8",
            "--seed",
            seed,
            "--out",
            path_str(path),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let geometry = |path: &Path| {
        let doc = read_json(path);
        (doc["vertices"].clone(), doc["cells"].clone())
    };
    assert!(geometry(&a) == geometry(&b), "same seed gave different meshes");
    assert!(geometry(&a).0 != geometry(&c).0, "different seeds gave the same vertices");
}

#[test]
fn unknown_mesh_kind_is_a_usage_error() {
    let out = polyvem(&["mesh", "--kind", "bogus", "--n", "4"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn solve_reports_nonzero_error_for_the_bubble() {
    let dir = TempDir::new().unwrap();
    let mesh = write_square_mesh(&dir);
    let out = polyvem(&[
        "solve",
        "--p",
        "1",
        "--r",
        "1",
        "--mesh",
        path_str(&mesh),
        "--case",
        "poly-bubble",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let line = stdout(&out);
    assert!(field(&line, "e1") > 0.0);
    assert!(field(&line, "residual") <= 1e-10);
    assert_eq!(field(&line, "dofs"), 25.0);
}

#[test]
fn zero_forcing_gives_zero_solution() {
    let dir = TempDir::new().unwrap();
    let sol = dir.path().join("s.json");
    let out = polyvem(&["solve", "--p", "2", "--r", "3", "--case", "zero", "--out", path_str(&sol)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = read_json(&sol);
    let errors = doc["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 3);
    assert!(errors.iter().all(|e| e.as_f64().unwrap() <= 1e-10));
    assert!(doc["values"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap().abs() <= 1e-10));
    assert_eq!(doc["run_config"]["element"]["p"], 2);
    assert_eq!(doc["run_config"]["case"], "zero");
}

#[test]
fn missing_mesh_file_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    let out = polyvem(&["solve", "--p", "1", "--r", "1", "--mesh", path_str(&missing)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_mesh_file_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"vertices\": [[0,0],[1,0]], \"cells\": [[0,1,5]]}").unwrap();
    let out = polyvem(&["solve", "--p", "1", "--r", "1", "--mesh", path_str(&bad)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn convergence_study_meets_the_energy_rate() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("c.csv");
    let json = dir.path().join("c.json");
    let out = polyvem(&[
        "convergence",
        "--p",
        "2",
        "--r",
        "3",
        "--levels",
        "4,8,16,32",
        "--assert-slope",
        "2:2.0:0.25",
        "--out",
        path_str(&csv),
        "--json",
        path_str(&json),
    ]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "h,dofs,e0,e1,e2,slope0,slope1,slope2");
    assert_eq!(lines.count(), 4);
    let doc = read_json(&json);
    assert_eq!(doc["run_config"]["levels"], serde_json::json!([4, 8, 16, 32]));
    let slope = doc["table"]["fitted_slopes"][2].as_f64().unwrap();
    assert!((slope - 2.0).abs() <= 0.25);
}

#[test]
fn failed_slope_assertion_exits_with_five() {
    let out = polyvem(&[
        "convergence",
        "--p",
        "1",
        "--r",
        "1",
        "--levels",
        "2,4,8",
        "--assert-slope",
        "1:5.0:0.1",
    ]);
    assert_eq!(code(&out), 5);
    assert!(stdout(&out).contains("FAILED"));
}

#[test]
fn convergence_needs_three_levels() {
    let out = polyvem(&["convergence", "--p", "2", "--r", "3", "--levels", "4"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn degree_below_the_smoothness_bound_is_rejected() {
    let out = polyvem(&["convergence", "--p", "3", "--r", "4", "--levels", "4,8,16"]);
    assert_eq!(code(&out), 2);
    let out = polyvem(&["solve", "--p", "3", "--r", "4"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_or_out_of_range_slope_assertions_are_usage_errors() {
    for spec in ["2:2.0", "x:2.0:0.1", "2:2.0:-1", "3:2.0:0.1"] {
        let out = polyvem(&["convergence", "--p", "2", "--r", "3", "--levels", "2,4,8", "--assert-slope", spec]);
        assert_eq!(code(&out), 2, "{spec}");
    }
}

#[test]
fn convergence_csv_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let mut csvs = Vec::new();
    for threads in ["1", "4"] {
        let csv = dir.path().join(format!("c{threads}.csv"));
        let out = polyvem(&[
            "--threads",
            threads,
            "convergence",
            "--p",
            "2",
            "--r",
            "3",
            "--kind",
            "perturbed-grid",
            "--levels",
            "2,4,8",
            "--out",
            path_str(&csv),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        csvs.push(fs::read(&csv).unwrap());
    }
    assert!(csvs[0] == csvs[1], "CSV differs between thread counts");
}

#[test]
fn element_info_prints_counts_and_ranks() {
    let out = polyvem(&["element-info", "--p", "3", "--r", "5", "--shape", "square"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("dofs=36, rank(D)=21, rank(K)=24"));

    let out = polyvem(&["element-info", "--p", "1", "--r", "1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("dofs=4,"));
    assert!(text.contains("rank(K)=3"));
}

#[test]
fn hexagon_projector_reproduces_polynomials() {
    let dir = TempDir::new().unwrap();
    let dump = dir.path().join("e.json");
    let out = polyvem(&[
        "element-info",
        "--p",
        "2",
        "--r",
        "3",
        "--shape",
        "hexagon",
        "--json",
        path_str(&dump),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = read_json(&dump);
    assert!(doc["report"]["polynomial_preservation"].as_f64().unwrap() <= 1e-10);
    assert_eq!(doc["report"]["dofs"], 24);
    assert_eq!(doc["run_config"]["mesh"]["source"], "polygon");
}

#[test]
fn element_info_accepts_explicit_polygons() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("poly.json");
    fs::write(&file, "[[0,0],[2,0],[2,1],[1,1.5],[0,1]]").unwrap();
    let out = polyvem(&["element-info", "--p", "2", "--r", "4", "--polygon-file", path_str(&file)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = polyvem(&["element-info", "--p", "2", "--r", "4", "--polygon", "0,0;2,0;2,1;1,1.5;0,1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn degenerate_polygon_is_a_validation_error() {
    let out = polyvem(&["element-info", "--p", "1", "--r", "1", "--polygon", "0,0;1,0;2,0"]);
    assert_eq!(code(&out), 3);
    let out = polyvem(&["element-info", "--p", "1", "--r", "1", "--polygon", "0,0;1"]);
    assert_eq!(code(&out), 2);
}
