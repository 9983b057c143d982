use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polaron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polaron"))
        .args(args)
        .output()
        .expect("spawn polaron")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{
    "g_bm": [0.25],
    "omega_ratios": [1.0],
    "lambda_p": {"start": 0.0, "stop": 0.2, "step": 0.1},
    "n_sites": 4,
    "n_ph": 2
}"#;

#[test]
fn sweep_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = polaron(&["sweep", "--config", &cfg, "--omega-ratio", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda_P,g_P,g_BM,omega_ratio,K_gs_over_pi,degenerate,E_gs,S_E,xi_1,xi_2,xi_3,xi_4,bare_overlap,status"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",ok")));
    assert!(rows.iter().all(|r| r.split(',').nth(3).unwrap() == "2.0000000000000000e0"));

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["omega_ratios"][0], 2.0);
    assert!(out.join("figure_gbm_0.25.csv").exists());
}

#[test]
fn lambda_flags_override_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    let o = polaron(&[
        "sweep", "--config", &cfg, "--lambda-max", "0.5", "--step", "0.25", "--no-figures", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(!out.join("figure_gbm_0.25.csv").exists());
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"g_bm": [0.25], "omega_ratio": [1.0]}"#);
    let o = polaron(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega_ratio"));
}

#[test]
fn bad_flags_and_values_are_config_errors() {
    assert_eq!(polaron(&["sweep", "--frobnicate"]).status.code(), Some(1));
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(polaron(&["sweep", "--config", &cfg, "--step", "0"]).status.code(), Some(1));
    assert_eq!(polaron(&["spectrum", "--config", &cfg, "--lambda-p", "-1"]).status.code(), Some(1));
}

#[test]
fn missing_config_and_unwritable_output_are_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    assert_eq!(polaron(&["sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(3));

    let cfg = write_config(tmp.path(), SMALL);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = polaron(&["sweep", "--config", &cfg, "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("file"));
}

#[test]
fn strict_mode_turns_solver_failures_into_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"g_bm": [0.25], "omega_ratios": [1.0], "lambda_p": {"start": 0.5, "stop": 0.5, "step": 0.1},
            "n_sites": 6, "n_ph": 3, "solver": {"max_iter": 1}}"#,
    );
    let out = tmp.path().join("o");
    let lenient = polaron(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(lenient.status.success());
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("error"));

    let strict = polaron(&["sweep", "--config", &cfg, "--strict", "--out", out.to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn converge_reports_the_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = polaron(&["converge", "--config", &cfg, "--max-nph", "4", "--lambda-p", "0", "--g-bm", "0", "--json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["trace"].as_array().unwrap().len(), 4);
    assert_eq!(report["certified"], 1);

    let o = polaron(&["converge", "--config", &cfg, "--max-nph", "2", "--lambda-p", "3", "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("not converged"));
}

#[test]
fn spectrum_prints_a_xi_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = polaron(&["spectrum", "--config", &cfg, "--lambda-p", "0.125", "--svd"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("K_gs/pi = 0 "));
    let table: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("alpha")).skip(1).collect();
    assert_eq!(table.len(), 4);
    assert!(table[1].contains("inf"));
}

#[test]
fn verify_small_passes() {
    let o = polaron(&["verify", "--small"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
