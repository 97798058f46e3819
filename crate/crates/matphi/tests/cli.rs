use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn matphi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matphi")).args(args).env_remove("MATPHI_SEED").output().expect("run matphi")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn failing(report: &Value) -> Vec<String> {
    report["reports"].as_array().unwrap().iter().filter(|r| r["pass"] == false).map(|r| r["check"].as_str().unwrap().to_string()).collect()
}

#[test]
fn square_passes_all_characterizations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = matphi(&["characterizations", "--phi", "x2", "--seed", "1", "--d", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    let mut checks: Vec<&str> = r["reports"].as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
    checks.dedup();
    assert_eq!(checks.len(), 10);
    assert!(failing(&r).is_empty());
}

#[test]
fn empty_fourier_passes() {
    let o = matphi(&["fourier", "--n", "0", "--trials", "10"]);
    assert!(o.status.success());
}

#[test]
fn cube_fails_exactly_where_expected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x3.json");
    let o = matphi(&["all", "--phi", "x3", "--d", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(failing(&r), ["char-a", "char-d", "char-e"]);
    assert!(r["reports"].as_array().unwrap().iter().all(|r| r["check"].as_str().unwrap().starts_with("char-")));
    assert!(r["notes"][0].as_str().unwrap().contains("only the characterizations"));
}

#[test]
fn cube_is_rejected_by_entropy_suites() {
    let o = matphi(&["efron-stein", "--phi", "x3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_has_the_documented_columns() {
    let o = matphi(&["poincare", "--d", "1", "--trials", "5", "--format", "csv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check,phi,d,n,trials,max_gap,pass,seed"));
    assert!(lines.all(|l| l.split(',').count() == 8));
}

#[test]
fn seed_falls_back_to_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_matphi")).args(["holevo", "--d", "1", "--trials", "2"]).env("MATPHI_SEED", "9").output().unwrap();
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["config"]["seed"], 9);
}

#[test]
fn generated_kernel_is_row_stochastic() {
    let o = matphi(&["generate", "kernel", "--n", "2", "--seed", "7"]);
    assert!(o.status.success());
    let k: Value = serde_json::from_slice(&o.stdout).unwrap();
    for row in k["rows"].as_array().unwrap() {
        let s: f64 = row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
        assert!((s - 1.0).abs() <= 1e-15, "{s}");
    }
}

#[test]
fn generation_is_byte_identical() {
    for kind in ["hermitian", "psd", "ensemble", "kernel", "boolean-function", "product-model"] {
        let a = matphi(&["generate", kind, "--d", "3", "--seed", "11"]);
        let b = matphi(&["generate", kind, "--d", "3", "--seed", "11"]);
        assert!(a.status.success(), "{kind}");
        assert_eq!(a.stdout, b.stdout, "{kind}");
    }
}

#[test]
fn generated_psd_analyses_as_entropy_input() {
    let dir = tempfile::tempdir().unwrap();
    let m = matphi(&["generate", "psd", "--d", "3", "--seed", "3"]);
    let m: Value = serde_json::from_slice(&m.stdout).unwrap();
    let file = serde_json::json!({ "d": 3, "support": [{ "p": 0.4, "matrix": m }, { "p": 0.6, "matrix": { "re": [[1,0,0],[0,1,0],[0,0,1]] } }] });
    let path = dir.path().join("z.json");
    std::fs::write(&path, file.to_string()).unwrap();
    let o = matphi(&["entropy", "--in", path.to_str().unwrap(), "--phi", "xlogx"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(a["entropy"].as_f64().unwrap() > 0.0);
}

#[test]
fn fourier_and_holevo_analyse_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, cmd) in [("boolean-function", "fourier"), ("ensemble", "holevo")] {
        let path = dir.path().join(format!("{kind}.json"));
        let g = matphi(&["generate", kind, "--d", "2", "--n", "3", "--seed", "5", "--out", path.to_str().unwrap()]);
        assert!(g.status.success());
        let o = matphi(&[cmd, "--in", path.to_str().unwrap()]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let a: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(a["pass"], true);
    }
}

#[test]
fn lsi_search_in_both_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = matphi(&["search", "lsi-counterexample", "--d", "1"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));

    let out = dir.path().join("witness.json");
    let o = matphi(&["search", "lsi-counterexample", "--d", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let w = json(&out);
    assert_eq!(w["found"], true);
    assert!(w["objective"].as_f64().unwrap() > 1e-6);
    assert_eq!(w["function"]["points"].as_array().unwrap().len(), 2);
}

#[test]
fn eta_of_identity_and_constant_kernels() {
    let dir = tempfile::tempdir().unwrap();
    for (rows, want) in [("[[1,0],[0,1]]", 1.0), ("[[0.3,0.7],[0.3,0.7]]", 0.0)] {
        let path = dir.path().join("k.json");
        std::fs::write(&path, format!(r#"{{"mu":[0.4,0.6],"kernel":{{"rows":{rows}}}}}"#)).unwrap();
        let o = matphi(&["eta", "--in", path.to_str().unwrap(), "--d", "2"]);
        assert!(o.status.success());
        let e: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(e["eta_hat"].as_f64(), Some(want));
    }
}

#[test]
fn bad_input_is_a_usage_error() {
    assert_eq!(matphi(&["nonsense"]).status.code(), Some(2));
    assert_eq!(matphi(&["entropy"]).status.code(), Some(2));
    assert_eq!(matphi(&["poincare", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(matphi(&["generate", "kernel", "--n", "0"]).status.code(), Some(2));
}
