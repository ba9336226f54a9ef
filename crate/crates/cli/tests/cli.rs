use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn symhull(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symhull")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn knorm_separates_worked_vector() {
    let dir = TempDir::new().unwrap();
    let x: Vec<f64> = [27.0, 5.0, 4.0, 3.0, 2.0, 1.0].iter().map(|v| v / 28.0).collect();
    let input = write(&dir, "x.json", &serde_json::to_string(&x).unwrap());
    let out = symhull(&["knorm", "--input", &input, "--k", "3"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["cNorm"].as_f64().unwrap() - 1.0360).abs() < 5e-4);
    assert_eq!(v["membership"], "outside");
    let chi: Vec<f64> = serde_json::from_value(v["hyperplane"]["coefficients"].clone()).unwrap();
    let lhs: f64 = chi.iter().zip(&x).map(|(a, b)| a * b).sum();
    assert!(lhs > 1.0);
    let u: Vec<f64> = serde_json::from_value(v["u"].clone()).unwrap();
    assert!((u[1] - 15.0 / 56.0).abs() < 1e-12);
}

#[test]
fn knorm_inside_has_no_hyperplane() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "x.json", "[0.5, 0.0, 0.0]");
    let out = symhull(&["knorm", "--input", &input, "--k", "2", "--norm", "linf"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["membership"], "inside");
    assert!(v["hyperplane"].is_null());
}

#[test]
fn envelope_equals_mccormick_on_signed_unit_box() {
    let dir = TempDir::new().unwrap();
    let point = write(&dir, "p.json", "[0.3, -0.5, 0.9]");
    let out = symhull(&["envelope", "--box", "-1,1,3", "--point", &point, "--compare-mccormick"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["gap"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn envelope_table_shape_and_determinism() {
    let args = ["envelope-table", "--box", "2,4,10", "--samples", "9", "--seed", "3"];
    let a = stdout(&symhull(&args));
    assert_eq!(a, stdout(&symhull(&args)));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "sample,z_e,z_r,gap,percent_gap");
    assert!(lines[10].starts_with("average,,,,"));
    for line in &lines[1..10] {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(f[1] >= f[2] - 1e-6);
    }
}

#[test]
fn spca_gaps_pitprops_three_diag() {
    let out = symhull(&["spca", "gaps", "--matrix", "pitprops", "--k", "3", "--kind", "diag"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let gap: f64 = row[5].parse().unwrap();
    assert!((gap - 57.86).abs() < 0.5, "{gap}");
}

#[test]
fn spca_exact_range_keeps_order() {
    let out = symhull(&["spca", "exact", "--matrix", "pitprops", "--k", "3..5"]);
    let text = stdout(&out);
    let ks: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ks, ["3", "4", "5"]);
    assert!(text.contains("2.9375"));
}

#[test]
fn spca_solve_on_json_instance() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "i.json", r#"{"n":3,"K":2,"sigma":[2,0,0,0,1,0,0,0,0.5]}"#);
    let out = symhull(&["spca", "solve", "--matrix", &inst, "--kind", "D,T"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    for line in text.lines().skip(1) {
        let obj: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((obj - 2.0).abs() < 1e-3, "{line}");
    }
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "not json");
    assert_eq!(symhull(&["knorm", "--input", &bad, "--k", "2"]).status.code(), Some(2));
    assert_eq!(symhull(&["spca", "exact", "--matrix", "pitprops", "--k", "13"]).status.code(), Some(2));
    assert_eq!(symhull(&["envelope-table", "--box", "4,2,3"]).status.code(), Some(2));
    assert_eq!(symhull(&["spca", "solve", "--matrix", "pitprops", "--k", "3", "--kind", "X"]).status.code(), Some(2));
    let notds = write(&dir, "m.json", "[[1,1],[0,0]]");
    let out = symhull(&["birkhoff", "--matrix", &notds]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn birkhoff_reconstructs() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "ds.json", "[[0.5,0.25,0.25],[0.25,0.5,0.25],[0.25,0.25,0.5]]");
    let out = symhull(&["birkhoff", "--matrix", &m]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["residual"].as_f64().unwrap() <= 1e-12);
    let w: Vec<f64> = serde_json::from_value(v["weights"].clone()).unwrap();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(w.len() <= 9);
}

#[test]
fn export_round_trips_and_rejects_cones_in_lp() {
    let dir = TempDir::new().unwrap();
    let u = write(&dir, "u.json", "[3, 1, 2, 0.5]");
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    for form in ["dual", "sortnet"] {
        let a = out(&format!("{form}.lp"));
        let b = out(&format!("{form}2.lp"));
        let st = symhull(&["export", "--model", "permutahedron", "--input", &u, "--maj-form", form, "--format", "lp", "--out", &a]);
        assert!(st.status.success());
        assert!(symhull(&["export", "--model", &a, "--format", "lp", "--out", &b]).status.success());
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
    let sd = out("d.dat-s");
    assert!(symhull(&["export", "--model", "spca:D", "--matrix", "pitprops", "--k", "3", "--format", "sdpa", "--out", &sd])
        .status
        .success());
    assert!(Path::new(&sd).exists());
    let st = symhull(&["export", "--model", "spca:D", "--matrix", "pitprops", "--k", "3", "--format", "lp", "--out", &out("x.lp")]);
    assert_eq!(st.status.code(), Some(2));
}
