use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ers_core::scenario::SettlingReport;
use ers_core::settle::FormulaId;

fn ers(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ers"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenarios.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SCALAR: &str = r#"
[[scenario]]
name = "sprl"
problem = { type = "scalar", e0 = 4.0 }
law = { type = "SPRL", kappa = 1.0, gamma = 0.5 }
numerics = { dt = 1e-4, horizon = 6.0, settle_tol = 1e-10 }
"#;

#[test]
fn settle_prints_labelled_rows() {
    let o = ers(&[
        "settle",
        "--law",
        r#"{ type = "SPRL", kappa = 1.0, gamma = 0.5 }"#,
        "--e0",
        "4",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(
        out.contains("exact") && out.contains("4.0000000000") && out.contains("sprr1.ts"),
        "{out}"
    );

    let o = ers(&[
        "settle",
        "--law",
        r#"{ type = "DPRL", kappa1 = 1.0, kappa2 = 1.0, gamma1 = 0.5, gamma2 = 1.5 }"#,
        "--e0",
        "inf",
    ]);
    let out = stdout(&o);
    assert!(out.contains("3.1415926536") && out.contains("key.ts.bound.2"), "{out}");
    assert!(!out.contains("exact"));
}

#[test]
fn settle_json_rows_use_known_formula_labels() {
    let o = ers(&[
        "settle",
        "--law",
        r#"{ type = "DPRLalt", rho = 1.0, kappa1 = 1.0, kappa2 = 1.0, gamma1 = 0.5, gamma2 = 1.5 }"#,
        "--e0",
        "10",
        "--json",
    ]);
    assert!(o.status.success());
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r["formula_id"].as_str().unwrap()).collect();
    assert!(labels.contains(&"rqp.tg") && labels.contains(&"1qp.ts.1"), "{labels:?}");
    assert!(labels.iter().all(|l| FormulaId::from_label(l).is_some()));
}

#[test]
fn invalid_law_is_a_configuration_error() {
    let o = ers(&["settle", "--law", r#"{ type = "SPRL", kappa = 1.0, gamma = 1.5 }"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
    let o = ers(&["simulate", "--config", "/nonexistent/file.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SCALAR);
    let out = dir.path().join("out");
    let o = ers(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = fs::read_to_string(out.join("sprl/trace.csv")).unwrap();
    assert!(csv.starts_with("t,e_1,w_1\n"));
    let report: SettlingReport =
        serde_json::from_str(&fs::read_to_string(out.join("sprl/report.json")).unwrap()).unwrap();
    assert!(report.pass);
    let t = report.empirical_settling_time.unwrap();
    assert!((t - 4.0).abs() <= 0.04, "{t}");
    assert_eq!(report.analytic_bound.unwrap().formula_id, FormulaId::Sprr1Ts);

    let o = ers(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS  sprl"));
}

#[test]
fn flags_override_file_numerics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SCALAR);
    let out = dir.path().join("out");
    let o = ers(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--dt",
        "1e-2",
        "--horizon",
        "1.0",
    ]);
    // SPRL from 4 needs 4 s, so a 1 s horizon cannot settle
    assert_eq!(o.status.code(), Some(1));
    let csv = fs::read_to_string(out.join("sprl/trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 101);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[[scenario]]
name = "noisy"
problem = { type = "benchmark" }
law = { type = "DPRLalt", rho = 1.0, kappa1 = 1.0, kappa2 = 1.0, gamma1 = 0.5, gamma2 = 1.5 }
comp = { type = "Signum", varpi = 1.0 }
dist = { type = "BoundedNoise", bound = 0.9, seed = 3 }
numerics = { dt = 1e-3, horizon = 2.0 }
"#,
    );
    let mut traces = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = ers(&["qp", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.code().is_some_and(|c| c <= 1));
        traces.push(fs::read(out.join("noisy/trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
    let out = dir.path().join("c");
    ers(&["qp", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "4"]);
    assert_ne!(fs::read(out.join("noisy/trace.csv")).unwrap(), traces[0]);
}

#[test]
fn qp_benchmark_settles_within_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ers(&["qp", "--out", out.to_str().unwrap(), "--horizon", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: SettlingReport =
        serde_json::from_str(&fs::read_to_string(out.join("benchmark/report.json")).unwrap()).unwrap();
    assert!(report.empirical_settling_time.unwrap() <= std::f64::consts::PI);
}

#[test]
fn signum_with_coarse_step_reports_chattering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[[scenario]]
name = "chatter"
problem = { type = "scalar", e0 = 1.0 }
law = { type = "SPRL", kappa = 1.0, gamma = 0.5 }
comp = { type = "Signum", varpi = 1.0 }
dist = { type = "Sinusoid", amplitude = 0.5, angular_frequency = 3.0, phase = 0.0 }
numerics = { dt = 1e-2, horizon = 5.0 }
"#,
    );
    let out = dir.path().join("out");
    let o = ers(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(stdout(&o).contains("chattering"), "{}", stdout(&o));
    let report: SettlingReport =
        serde_json::from_str(&fs::read_to_string(out.join("chatter/report.json")).unwrap()).unwrap();
    assert!(report.residual_sup > 0.0 && report.residual_sup <= 2.0 * 1e-2);
    assert!(report.margins.residual.unwrap() >= 0.0);
}

#[test]
fn verify_subset_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = ers(&[
        "verify",
        "--level",
        "quick",
        "--criterion",
        "1,14",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("[PASS] criterion  1") && text.contains("[PASS] criterion 14"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(summary["criteria"].as_array().unwrap().len(), 2);
    assert_eq!(summary["level"], "quick");

    let o = ers(&["verify", "--level", "slow"]);
    assert_eq!(o.status.code(), Some(2));
}
