use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use equator_forge::io::{parse_tensor, read_tensor};
use equator_forge::tensor::{is_positive, ProbeOptions};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_equator-forge"));
    c.env("EQUATOR_FORGE_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bump-metric.json")
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path_str(&out)]);
    let o = run(&full);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn gen_random_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.json", &["random", "--n", "3", "--seed", "7"]);
    let b = gen(dir.path(), "b.json", &["random", "--n", "3", "--seed", "7"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let t = read_tensor(&a).unwrap();
    assert!(t.construction.unwrap()["margin"].as_f64().unwrap() >= 0.1);
}

#[test]
fn gen_fubini_study_has_sectional_range_one_to_four() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "fs.json", &["fubini-study", "--m", "2"]);
    let t = read_tensor(&p).unwrap().tensor;
    assert_eq!(t.n(), 5);
    let probe = is_positive(&t, 0.0, ProbeOptions::default());
    assert!((probe.min_sectional - 1.0).abs() <= 1e-6, "{}", probe.min_sectional);
    let neg = &t * -1.0;
    let top = -is_positive(&neg, f64::NEG_INFINITY, ProbeOptions::default()).min_sectional;
    assert!((top - 4.0).abs() <= 1e-6, "{top}");
}

#[test]
fn verify_round_and_random_pass() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("round.json", vec!["round", "--n", "3"]),
        ("rand.json", vec!["random", "--n", "3"]),
    ] {
        let p = gen(dir.path(), name, &args);
        let report = dir.path().join(format!("{name}.report"));
        let o = run(&["verify", path_str(&p), "--out", path_str(&report)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
        assert_eq!(v["pass"], true);
        assert_eq!(v["seed"], 7);
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["config"]["tolerances"]["mean_curvature"], 1e-6);
        for check in [
            "roundtrip",
            "mean_curvature",
            "killing_constancy",
            "metric_equation",
            "equivariance",
            "antipodal",
        ] {
            assert_eq!(v["checks"][check]["pass"], true, "{check}");
        }
    }
}

#[test]
fn verify_bump_fixture_fails_mean_curvature() {
    let o = run(&["verify", path_str(&fixture())]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["checks"]["mean_curvature"]["pass"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAILED mean_curvature"));
}

#[test]
fn tolerance_overrides_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "r.json", &["round", "--n", "2"]);
    let o = run(&[
        "verify",
        path_str(&p),
        "--tol-antipodal",
        "0.5",
        "--seed",
        "11",
        "--samples",
        "10",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["checks"]["antipodal"]["tolerance"], 0.5);
    assert_eq!(v["checks"]["antipodal"]["seed"], 11);
    assert_eq!(v["seed"], 11);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"format":"curv-dense-v1","n":2,"coeffs":[1,2,3]}"#).unwrap();
    assert_eq!(run(&["verify", path_str(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["verify", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "fubini-study", "--m", "1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let r2 = gen(dir.path(), "r2.json", &["round", "--n", "2"]);
    assert_eq!(run(&["spectrum", path_str(&r2)]).status.code(), Some(2));
    let sing = dir.path().join("sing.json");
    fs::write(&sing, "[[1,0,0],[0,1,0],[0,0,0]]").unwrap();
    assert_eq!(run(&["act", path_str(&r2), path_str(&sing)]).status.code(), Some(2));
    let o = bin()
        .args(["gen", "round", "--n", "2"])
        .env("EQUATOR_FORGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn area_of_round_equators_is_four_pi() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "round.json", &["round", "--n", "3"]);
    let csv_path = dir.path().join("area.csv");
    let o = run(&["area", path_str(&p), "--equators", "100", "--out", path_str(&csv_path)]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 100);
    for r in rows {
        let a: f64 = r[4].parse().unwrap();
        assert!((a - 4.0 * std::f64::consts::PI).abs() <= 1e-8);
    }
    let info: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(info["command"], "area");
    assert_eq!(info["seed"], 7);
}

#[test]
fn radon_of_one_matches_area_row_for_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "rand.json", &["random", "--n", "3", "--seed", "3"]);
    let area = run(&["area", path_str(&p), "--equators", "20", "--order", "16"]);
    let radon = run(&[
        "radon",
        path_str(&p),
        "--equators",
        "20",
        "--order",
        "16",
        "--function",
        "1",
    ]);
    let a = csv_rows(&String::from_utf8(area.stdout).unwrap());
    let r = csv_rows(&String::from_utf8(radon.stdout).unwrap());
    assert_eq!(a, r);
    let odd = run(&[
        "radon",
        path_str(&p),
        "--equators",
        "5",
        "--order",
        "16",
        "--function",
        "x0 * x1 * x2 + x3",
    ]);
    for row in csv_rows(&String::from_utf8(odd.stdout).unwrap()) {
        assert!(row[4].parse::<f64>().unwrap().abs() <= 1e-8);
    }
    assert_eq!(run(&["radon", path_str(&p), "--function", "x7"]).status.code(), Some(2));
}

#[test]
fn spectrum_of_round_metric() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "round.json", &["round", "--n", "3"]);
    let o = run(&["spectrum", path_str(&p), "--degree", "8", "--tol-nullity", "1e-6"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 81);
    let ev: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((ev[0] + 2.0).abs() <= 1e-4);
    assert!(ev[1..4].iter().all(|e| e.abs() <= 1e-6));
    assert!(ev[4] > 1.0);
    let conv = run(&["spectrum", path_str(&p), "--convergence", "4,6", "--normal", "0,0,-1,1"]);
    let rows = csv_rows(&String::from_utf8(conv.stdout).unwrap());
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..3], ["4", "1", "3"]);
}

#[test]
fn act_with_plus_minus_identity_keeps_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "rand.json", &["random", "--n", "3", "--seed", "5"]);
    let coeff_text = |path: &Path| {
        let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        serde_json::to_string(&v["coeffs"]).unwrap()
    };
    for (name, m) in [
        ("id", "[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]"),
        ("neg", "[[-1,0,0,0],[0,-1,0,0],[0,0,-1,0],[0,0,0,-1]]"),
    ] {
        let mp = dir.path().join(format!("{name}.json"));
        fs::write(&mp, m).unwrap();
        let out = dir.path().join(format!("{name}.out.json"));
        let o = run(&["act", path_str(&p), path_str(&mp), "--out", path_str(&out)]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(coeff_text(&p), coeff_text(&out), "{name}");
    }
}

#[test]
fn act_then_inverse_restores_the_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(dir.path(), "rand.json", &["random", "--n", "2", "--seed", "8"]);
    let t = dir.path().join("t.json");
    let ti = dir.path().join("ti.json");
    fs::write(&t, r#"{"format":"matrix-v1","rows":[[2,1,0],[0,1,0],[0,0.5,1]]}"#).unwrap();
    fs::write(
        &ti,
        r#"{"format":"matrix-v1","rows":[[0.5,-0.5,0],[0,1,0],[0,-0.5,1]]}"#,
    )
    .unwrap();
    let once = dir.path().join("once.json");
    let twice = dir.path().join("twice.json");
    run(&["act", path_str(&p), path_str(&t), "--out", path_str(&once)]);
    run(&["act", path_str(&once), path_str(&ti), "--out", path_str(&twice)]);
    let a = read_tensor(&p).unwrap().tensor;
    let b = read_tensor(&twice).unwrap().tensor;
    assert!(a.max_abs_diff(&b) <= 1e-10);
    let tagged = parse_tensor(&fs::read_to_string(&twice).unwrap()).unwrap();
    assert_eq!(tagged.construction.unwrap()["source"]["kind"], "act");
}

#[test]
fn left_invariant_generator_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let p = gen(
        dir.path(),
        "li.json",
        &["left-invariant", "--a", "1", "--b", "1", "--c", "4"],
    );
    let o = run(&["verify", path_str(&p), "--equators", "10", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}
