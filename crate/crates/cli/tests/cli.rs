use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_bubble-kernel");

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn classify_degenerate_cubic() {
    let (code, out, _) = run(&["classify", "--P", "[[2,0],[0,0],[0,0],[1,0]]", "--Q", "[[0,0],[1,0]]"]);
    assert_eq!(code, 10);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "degenerate");
    assert_eq!(v["d"], 1);
    assert_eq!(v["dim_N"], 5);
    assert_eq!(v["dim_kernel"], 19);
    for key in ["version", "seed", "tolerances", "normalization", "target_rotation"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn classify_identity_and_real_shorthand() {
    let (code, out, _) = run(&["classify", "--P", "[[0,0],[1,0]]", "--Q", "[[1,0]]"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "nondegenerate");
    assert_eq!(v["dim_kernel"], 9);
    let (code, _, _) = run(&["classify", "--P", "[0,1]", "--Q", "[1]"]);
    assert_eq!(code, 0);
}

#[test]
fn malformed_input_names_the_field() {
    let (code, _, err) = run(&["classify", "--P", "[[2,0],[0,0", "--Q", "[[0,0],[1,0]]"]);
    assert_eq!(code, 1);
    assert!(err.contains("--P"), "{err}");
    let (code, _, err) = run(&["classify", "--P", "[1,2]", "--Q", "[[0,\"x\"]]"]);
    assert_eq!(code, 1);
    assert!(err.contains("--Q"), "{err}");
    let (code, _, err) = run(&["classify", "--P", "[1,2]"]);
    assert_eq!(code, 1);
    assert!(err.contains("--Q"), "{err}");
    let (code, _, err) = run(&["classify", "--P", "[0,0]", "--Q", "[1]"]);
    assert_eq!(code, 1);
    assert!(err.contains("constant"), "{err}");
}

#[test]
fn input_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("b.json");
    std::fs::write(&input, r#"{"P": [[2,0],[0,0],[0,0],[1,0]], "Q": [[0,0],[1,0]], "label": "cubic"}"#).unwrap();
    let out = dir.path().join("report.json");
    let (code, stdout, _) = run(&["classify", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 10);
    assert!(stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["d"], 1);
    std::fs::write(&input, "{\"P\": [[2,0]],\n \"Q\": oops}").unwrap();
    let (code, _, err) = run(&["classify", "--input", input.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn tolerance_override_is_flagged() {
    let (code, out, _) = run(&["classify", "--P", "[0,0,1]", "--Q", "[1]", "--tol-nullity", "0.5"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["warnings"][0].as_str().unwrap().contains("tol-nullity"));
}

#[test]
fn verify_mismatch_exits_three() {
    let (code, out, _) = run(&["verify", "--P", "[0,0,0,1]", "--Q", "[1]", "--tol-kernel", "1e3", "--Lmax", "12"]);
    assert_eq!(code, 3);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["agreement"], false);
    assert_eq!(v["d"], 0);
}

#[test]
fn sweep_edge_cases() {
    let (code, _, err) = run(&["sweep", "--k", "4"]);
    assert_eq!(code, 1);
    assert!(err.contains("unsupported degree"), "{err}");
    let (code, out, err) = run(&["sweep", "--k", "3", "--starts", "0"]);
    assert_eq!(code, 0);
    assert!(err.contains("warning"));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["classes"].as_array().unwrap().len(), 0);
}

#[test]
fn sweep_finds_one_class() {
    let (code, out, _) = run(&["sweep", "--k", "3", "--starts", "8", "--seed", "3"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["classes"].as_array().unwrap().len(), 1);
    assert_eq!(v["classes"][0]["matches_reference"], true);
}

#[test]
fn energy_report() {
    let (code, out, _) = run(&["energy", "--P", "[0,0,1]", "--Q", "[1]"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["energy_over_8pi"].as_f64().unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn fields_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fields");
    let (code, out, _) = run(&["fields", "--P", "[2,0,0,1]", "--Q", "[0,1]", "--csv-dir", csv.to_str().unwrap(), "--grid", "24"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["gram_rank"], 4);
    let fields = v["fields"].as_array().unwrap();
    assert_eq!(fields.len(), 3 + 14 + 1);
    for f in fields {
        assert!(f["residual"].as_f64().unwrap() < 1e-6, "{f}");
    }
    let text = std::fs::read_to_string(csv.join("reconstructed_0.csv")).unwrap();
    assert!(text.starts_with("z_re,z_im,v0\n"));
    let tangent = std::fs::read_to_string(csv.join("tangent_0.csv")).unwrap();
    assert!(tangent.starts_with("z_re,z_im,v0,v1,v2\n"));
}

#[test]
fn thread_cap_is_validated() {
    let out = Command::new(BIN)
        .env("BUBBLE_KERNEL_THREADS", "zero")
        .args(["classify", "--P", "[0,1]", "--Q", "[1]"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
