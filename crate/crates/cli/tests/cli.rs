use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn tev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tev"))
        .args(args)
        .env_remove("TEV_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("structured output is JSON")
}

/// Data rows of a CSV artifact, comment lines and header removed.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn p(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn eval_on_unit_index_prints_zero() {
    let out = stdout(&tev(&["eval", "--profile", &p("unit"), "--k", "1.5"]));
    assert_eq!(rows(&out), vec![vec![1.5, 0.0, 0.0, 0.0]]);
    let many = stdout(&tev(&["eval", "-p", &p("two_layer_4_16"), "-k", "1.5707963267948966,2+0.5i", "-k", "-3i"]));
    let r = rows(&many);
    assert_eq!(r.len(), 3);
    assert!(r[0][2].abs() < 1e-14);
    assert_eq!((r[2][0], r[2][1]), (0.0, -3.0));
}

#[test]
fn sweep_matches_point_evaluation() {
    let out = stdout(&tev(&["sweep", "-p", &p("two_layer_4_16"), "--k-min", "1", "--k-max", "5", "--points", "5"]));
    assert!(out.contains("k_re,k_im,d_re,d_im,Dd_re,Dd_im"));
    let r = rows(&out);
    assert_eq!(r.len(), 5);
    for row in &r {
        assert!((row[2] - row[4]).abs() < 1e-12);
    }
}

#[test]
fn eigs_and_ceigs_find_the_quarter_wave_zero() {
    let out = stdout(&tev(&["eigs", "-p", &p("two_layer_4_16"), "--k-max", "5"]));
    let r = rows(&out);
    assert_eq!(r.len(), 3);
    assert!((r[0][1] - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    let c = stdout(&tev(&["ceigs", "-p", &p("two_layer_4_16"), "--rect", "0.5,2.5,-0.2,0.4"]));
    let r = rows(&c);
    assert_eq!(r.len(), 1);
    assert!((r[0][1] - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
}

#[test]
fn density_reports_fit_in_header() {
    let out = stdout(&tev(&["density", "-p", &p("constant_4"), "--t-max", "120"]));
    let delta: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("# delta_estimate = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((delta - 2.0).abs() < 0.1);
    assert_eq!(rows(&out).len(), 10);
}

#[test]
fn dominant_model_is_exact_for_layers() {
    let out = stdout(&tev(&["dominant", "-p", &p("two_layer_4_16"), "--format", "text", "--points", "20"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["result"]["max_abs_difference"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["rows"].as_array().unwrap().len(), 20);
}

#[test]
fn check_flags_the_jump_bound() {
    let v = json(&tev(&["check", "-p", &p("two_layer_4_16"), "--eps", "0.05"]));
    let verdict = &v["result"]["case_verdict"];
    assert_eq!(verdict["case"], "inapplicable");
    assert!(verdict["reason"].as_str().unwrap().contains("ε₀ bound violated"));
    let csv = stdout(&tev(&["check", "-p", &p("irrational_pair"), "--eps", "0.05", "--format", "csv"]));
    assert!(csv.contains("field,value\n"));
}

#[test]
fn kronecker_hit_and_miss() {
    let v = json(&tev(&["kronecker", "--v", "1.4142135623730951,-0.7", "--a", "0.25,0", "--eps1", "0.01", "--t-min", "5"]));
    let t = v["result"]["t"].as_f64().unwrap();
    let p0 = v["result"]["p"][0].as_f64().unwrap();
    assert!((t * 2f64.sqrt() - p0 - 0.25).abs() < 0.01);
    let miss = tev(&["kronecker", "--v", "1,0.5", "--a", "0.25,0.25", "--eps1", "0.01", "--t-min", "10", "--t-cap", "2000"]);
    assert_eq!(miss.status.code(), Some(1));
    let err = String::from_utf8_lossy(&miss.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn contour_bound_is_positive() {
    let out = stdout(&tev(&["contour", "-p", &p("irrational_pair"), "--samples", "200"]));
    let min: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("# min_normalized = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(min > 0.0);
    assert!(rows(&out).len() >= 190);
}

#[test]
fn counterexample_identity_holds() {
    let v = json(&tev(&["counterexample", "--kmax", "50"]));
    assert!(v["result"]["ratio_deviation"].as_f64().unwrap() <= 1e-10);
    assert!(v["result"]["closed_form_deviation"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["result"]["grid_points"], 500);
}

#[test]
fn invert_from_eigs_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("eigs.csv");
    let d = data.display().to_string();
    stdout(&tev(&["eigs", "-p", &p("two_layer_4_16"), "--k-max", "32", "-o", &d]));
    let v = json(&tev(&[
        "invert", "--eigenvalues", &d, "--model", "two-layer-inner", "--outer", "16", "--r1", "0.5", "--take", "20",
        "--guess", "2", "--guess", "6", "--guess", "11",
    ]));
    assert!((v["result"]["best_params"][0].as_f64().unwrap() - 4.0).abs() < 1e-3);
    let pair = json(&tev(&[
        "invert", "--eigenvalues", &d, "--model", "l-constants", "--breakpoints", "0.5", "--guess", "3,14", "--guess",
        "14,3",
    ]));
    assert_eq!(pair["result"]["non_uniqueness_flag"], true);
    let tail = json(&tev(&[
        "invert", "--eigenvalues", &d, "--model", "l-constants", "--breakpoints", "0.25", "--tail-alpha", "0.5",
        "--tail-coefficients", "16", "--guess", "3,5",
    ]));
    let best = &tail["result"]["best_params"];
    assert!((best[0].as_f64().unwrap() - 4.0).abs() < 1e-3 && (best[1].as_f64().unwrap() - 4.0).abs() < 1e-3);
    let missing = tev(&["invert", "--eigenvalues", &d, "--model", "two-layer-inner", "--guess", "2"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn mollify_table_shrinks() {
    let out = stdout(&tev(&["mollify", "-p", &p("kinked")]));
    assert!(out.contains("# error_non_increasing = true"));
    let r = rows(&out);
    assert_eq!(r.iter().map(|x| x[0]).collect::<Vec<_>>(), vec![4.0, 8.0, 16.0, 32.0]);
    assert!(r.iter().all(|x| x[3] <= 3.0 + 1e-9));
    let layered = tev(&["mollify", "-p", &p("two_layer_4_16")]);
    assert_eq!(layered.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(tev(&["eval", "--profile", "/nonexistent.json", "--k", "1"]).status.code(), Some(1));
    assert_eq!(tev(&["eval", "--profile", &p("unit")]).status.code(), Some(2));
    assert_eq!(tev(&["eval", "--profile", &p("unit"), "--k", "1+zz"]).status.code(), Some(2));
    assert_eq!(tev(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tev(&["eigs", "-p", &p("unit"), "--k-max", "5"]).status.code(), Some(1));
    assert_eq!(tev(&["sweep", "-p", &p("unit"), "--k-max", "-1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"regularity":"c2","bounds":{"n_star":1,"n_star_upper":2},"segments":[]}"#).unwrap();
    let out = tev(&["eval", "-p", bad.to_str().unwrap(), "-k", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn reruns_are_byte_identical_and_jobs_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |o: &Path| {
        vec![
            "sweep".to_string(),
            "-p".into(),
            p("affine"),
            "--k-max".into(),
            "30".into(),
            "--points".into(),
            "64".into(),
            "-o".into(),
            o.display().to_string(),
        ]
    };
    let one = Command::new(env!("CARGO_BIN_EXE_tev")).args(args(&a)).env("TEV_JOBS", "1").status().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_tev")).args(args(&b)).arg("--jobs").arg("4").status().unwrap();
    assert!(one.success() && many.success());
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    assert!(!x.contains(&b'\r'));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    assert_eq!(tev(&["--jobs", "0", "eval", "-p", &p("unit"), "-k", "1"]).status.code(), Some(2));
}
