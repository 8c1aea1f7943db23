use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tsrc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsrc")).current_dir(dir).args(args).output().unwrap()
}

fn error_of(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn bad_flags_report_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = tsrc(dir.path(), &["gen", "--n", "ten"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["error"], "ConfigInvalid");

    let out = tsrc(dir.path(), &["plan", "--n", "3", "--t-grid", "0.9:0.5:0.01"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"], "ConfigInvalid");
}

#[test]
fn module_errors_pass_through() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tsrc(dir.path(), &["gen", "--n", "4", "--out", "s.json"]).status.success());
    assert!(tsrc(dir.path(), &["plan", "--input", "s.json", "--out", "r.json"]).status.success());

    let out = tsrc(dir.path(), &["fidelity", "--input", "r.json", "--eta", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_of(&out);
    assert_eq!(err["error"], "BadEta");
    assert!(err["message"].as_str().unwrap().contains('0'));

    let out = tsrc(dir.path(), &["stats", "--input", "missing.json"]);
    assert_eq!(error_of(&out)["error"], "Io");

    // vacuum has no Mandel parameter but the report still succeeds
    assert!(tsrc(dir.path(), &["gen", "--n", "0", "--out", "v.json"]).status.success());
    let out = tsrc(dir.path(), &["stats", "--input", "v.json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["report"]["mandel_q"].is_null());
}

#[test]
fn outputs_are_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(tsrc(dir.path(), &["sweep", "--n", "2,4", "--realizations", "3", "--seed", "5", "--out", "s.csv"]).status.success());
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# tool=tsrc version="));
    assert!(lines[0].contains("prng=chacha20"));
    let config: Value = serde_json::from_str(lines[1].strip_prefix("# config=").unwrap()).unwrap();
    assert_eq!(config["seed"], 5);
    assert_eq!(lines[2], "n,realization,mean_n,delta_n,mandel_q,g2,x1_var,x2_var,entropy");
    // realization 0 and the mean row for each N
    assert_eq!(lines.len(), 3 + 4);
    assert!(lines[4].starts_with("2,-1,"));

    assert!(tsrc(dir.path(), &["gen", "--n", "6", "--seed", "1", "--out", "g.json"]).status.success());
    assert!(tsrc(dir.path(), &["plan", "--input", "g.json", "--fixed-t", "0.9", "--out", "p.json", "--table", "t.txt"]).status.success());
    let recipe: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    for key in ["coeffs", "roots", "alphas", "transmittance", "success_prob", "residual", "meta"] {
        assert!(!recipe[key].is_null(), "{key}");
    }
    assert_eq!(recipe["transmittance"].as_f64(), Some(0.9));
    assert_eq!(recipe["meta"]["config"]["source"]["input"], "g.json");
    let table = std::fs::read_to_string(dir.path().join("t.txt")).unwrap();
    assert_eq!(table.lines().count(), 2 + 7);
}
