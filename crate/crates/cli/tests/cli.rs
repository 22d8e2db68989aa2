use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn hadamard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hadamard"))
        .args(args)
        .env("HADAMARD_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn omega_examples() {
    let v = stdout_json(&hadamard(&["omega", "--a", "[[1,0]]", "--b", "[[1,0]]", "--omega-radius", "2"]));
    let pts: Vec<_> = v["points"].as_array().unwrap().iter().map(pair).collect();
    assert_eq!(pts, vec![(0.0, 0.0), (1.0, 0.0)]);

    let v = stdout_json(&hadamard(&["omega", "--a", "[[2,0]]", "--b", "[[3,0]]", "--omega-radius", "5"]));
    assert_eq!(v["points"].as_array().unwrap().len(), 1);

    let lattice = r#"{"lattice": {"step": [1, 0], "exclude_zero": true}}"#;
    let v = stdout_json(&hadamard(&["omega", "--a", lattice, "--b", "[[0,1],[2,0]]", "--omega-radius", "3.5"]));
    // ±i·{1,2,3} and ±2·{1}: the lattice Z·1 \ {0} times {i, 2} within |z| ≤ 3.5.
    assert_eq!(v["points"].as_array().unwrap().len(), 1 + 6 + 2);
}

#[test]
fn continue_fixtures_match_oracles() {
    let dir = fixtures();
    let run = |name: &str| {
        let spec = dir.join(name);
        stdout_json(&hadamard(&["continue", "--spec", spec.to_str().unwrap()]))
    };
    let v = run("rational.json");
    let (re, im) = pair(&v["value"]);
    assert!((re - 10.0 / 7.0).abs() < 1e-8 && im.abs() < 1e-8);
    assert_eq!(v["snapshots"].as_array().unwrap().len(), 16);

    let v = run("log.json");
    let (re, im) = pair(&v["value"]);
    assert!((re + 0.7f64.ln()).abs() < 1e-6 && (im + 2.0 * PI).abs() < 1e-6);

    // Li₂ after one loop around 1: Li₂(0.3) − 2πi·log(0.3).
    let v = run("li2.json");
    let (re, im) = pair(&v["value"]);
    let li2: f64 = (1..200).map(|n| 0.3f64.powi(n) / (n * n) as f64).sum();
    assert!((re - li2).abs() < 1e-6 && (im + 2.0 * PI * 0.3f64.ln()).abs() < 1e-6, "{re} {im}");
    assert_eq!(v["snapshots"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_path_names_the_field() {
    let out = hadamard(&[
        "continue", "--f", "geometric(1)", "--g", "geometric(1)",
        "--path", r#"{"waypoints": [[0.3, 0], [0.5, "a"]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("waypoints[1][1]"));

    let out = hadamard(&[
        "continue", "--spec", r#"{"f": "log_f0", "g": "geometric(1)", "path": {"points": []}}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("points"));
}

#[test]
fn validation_errors_exit_with_two() {
    let geom = ["--f", "geometric(1)", "--g", "geometric(1)"];
    let through = [&["continue"][..], &geom, &["--path", r#"{"waypoints": [[0.3, 0], [1.5, 0]]}"#]].concat();
    assert_eq!(hadamard(&through).status.code(), Some(2));
    let outside = [&["continue"][..], &geom, &["--path", r#"{"waypoints": [[1.5, 0.5], [2, 0.5]]}"#]].concat();
    assert_eq!(hadamard(&outside).status.code(), Some(2));
    let few = [&["continue"][..], &geom, &["--nodes", "32", "--path", r#"{"waypoints": [[0.3, 0], [0.5, 0]]}"#]].concat();
    let out = hadamard(&few);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_nodes"));
    let bad_germ = hadamard(&["continue", "--f", "nope", "--g", "log_f0", "--path", "[]"]);
    assert_eq!(bad_germ.status.code(), Some(2));
}

#[test]
fn unreachable_tolerance_exits_with_three() {
    let spec = fixtures().join("rational.json");
    let out = hadamard(&[
        "continue", "--spec", spec.to_str().unwrap(), "--tol", "1e-30", "--nodes", "64", "--max-nodes", "2048",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("estimate"));
}

#[test]
fn output_is_deterministic_and_csv_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixtures().join("log.json");
    let (a, b, csv) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("nodes.csv"));
    for out in [&a, &b] {
        let o = hadamard(&[
            "continue", "--spec", spec.to_str().unwrap(), "--nodes", "96", "--snapshots", "0.5,1",
            "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("t,index,re,im"));
    assert!(rows.lines().skip(1).all(|l| l.starts_with("5.") || l.starts_with("1.")));
}

#[test]
fn monodromy_of_log_is_minus_two_pi_i() {
    let v = stdout_json(&hadamard(&[
        "monodromy", "--f", "log_f0", "--g", "geometric(1)", "--basepoint", "0.3", "--omega", "1", "--nodes", "96",
    ]));
    let (re, im) = pair(&v["difference"]);
    assert!(re.abs() < 1e-8 && (im + 2.0 * PI).abs() < 1e-8);
    assert_eq!(v["loop_kind"], "circle");
}

#[test]
fn borel_check_on_series_files() {
    let f = r#"{"coeffs": [[1, 0], [0.5, 0], [0.25, 0], [-3, 0]], "offset": 1, "order": 5}"#;
    let g = r#"{"coeffs": [[2, 0], [0, 0], [1, 0], [0.125, 0]], "offset": 1, "order": 5}"#;
    let v = stdout_json(&hadamard(&["borel-check", "--f", f, "--g", g]));
    assert_eq!(v["exact"], true);
    assert_eq!(hadamard(&["borel-check"]).status.code(), Some(0));
}

#[test]
fn selftest_detects_injected_bridge_bug() {
    let ok = hadamard(&["selftest", "--only", "7,8"]);
    assert!(ok.status.success());
    assert_eq!(String::from_utf8_lossy(&ok.stdout).matches("[PASS]").count(), 2);
    let bad = hadamard(&["selftest", "--only", "7", "--inject-bridge-bug"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("[FAIL] criterion 7"));
}
