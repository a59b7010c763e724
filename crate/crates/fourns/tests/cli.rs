//! End-to-end checks of the `fourns` binary: exit codes, emitted files,
//! overrides and reproducibility.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fourns"))
}

#[test]
fn list_prints_every_kind() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in [
        "conservation_drift",
        "scaling_invariance",
        "norm_inflation",
        "bilinear_sweep",
        "refined_bilinear_sweep",
        "linear_estimate_sweep",
        "hierarchy_equivalence",
        "picard_convergence",
        "kernel_decay",
    ] {
        assert!(text.contains(kind), "missing {kind} in list output");
    }
}

#[test]
fn scaling_run_emits_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "scaling-invariance",
            "--out",
            dir.path().to_str().unwrap(),
            "--override",
            "n=256",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("critical_ratio_error"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["pass"], serde_json::json!(true));
    assert_eq!(summary["config"]["params"]["n"], serde_json::json!(256));

    // byte-identical rerun
    let dir2 = tempfile::tempdir().unwrap();
    let out2 = bin()
        .args([
            "scaling-invariance",
            "--out",
            dir2.path().to_str().unwrap(),
            "--override",
            "n=256",
        ])
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(0));
    let csv2 = std::fs::read_to_string(dir2.path().join("results.csv")).unwrap();
    assert_eq!(csv, csv2);
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"xs_count": 40}"#).unwrap();
    let out = bin()
        .args([
            "kernel-decay",
            "--config",
            cfg_path.to_str().unwrap(),
            "--override",
            "ts=[1.0,2.0,4.0]",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["config"]["params"]["xs_count"], serde_json::json!(40));
    assert_eq!(
        summary["config"]["params"]["ts"],
        serde_json::json!([1.0, 2.0, 4.0])
    );
}

#[test]
fn unknown_key_is_config_error() {
    let out = bin()
        .args(["kernel-decay", "--override", "bogus=3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unresolvable_setup_is_exit_two() {
    // carrier shells beyond the grid's Nyquist wavenumber
    let out = bin()
        .args(["bilinear-sweep", "--override", "n=1024", "--override", "seeds=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn dump_traces_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "conservation-drift",
            "--out",
            dir.path().to_str().unwrap(),
            "--dump-traces",
            "--override",
            "n=256",
            "--override",
            "dt=0.001",
            "--override",
            "t_final=0.01",
        ])
        .output()
        .unwrap();
    // numeric pass/fail is not the point here; the artifacts are
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    assert!(dir.path().join("conservation_case0.trace").exists());
    assert!(dir.path().join("conservation_case0.trace.json").exists());
    let trace = fourns::solver::read_trace(&dir.path().join("conservation_case0.trace")).unwrap();
    assert!(trace.len() >= 2);
}
