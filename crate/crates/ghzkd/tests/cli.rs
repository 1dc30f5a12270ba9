//! End-to-end checks of the binary: flags, exit codes, report shape.

use std::process::Command;

fn ghzkd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ghzkd"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn honest_run_exits_zero_with_three_keys() {
    let out = ghzkd(&[
        "--command", "run", "--n", "4", "--tau", "2", "--attack", "none", "--seed", "7",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema_version"], "1");
    let keys = &report["results"]["keys"];
    for key in ["k_a", "k_b", "k_c"] {
        assert_eq!(keys[key].as_str().unwrap().len(), 4, "{key}");
    }
    assert_eq!(keys["k_ab"]["alice"], keys["k_ab"]["peer"]);
}

#[test]
fn attacked_run_exits_one() {
    let out = ghzkd(&[
        "--command", "run", "--n", "4", "--tau", "2", "--attack", "intercept-resend-b",
        "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["results"]["aborted"], true);
}

#[test]
fn detect_reports_the_exact_rate() {
    let out = ghzkd(&[
        "--command", "detect", "--attack", "measure-resend-b", "--sessions", "0",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let exact = report["results"]["per_particle_exact"].as_f64().unwrap();
    assert!((exact - 0.1875).abs() < 1e-12);
}

#[test]
fn efficiency_reports_the_formula() {
    let out = ghzkd(&["--command", "efficiency", "--n", "96", "--tau", "4"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["results"]["ce"].as_f64().unwrap(), 0.09);
    assert_eq!(report["results"]["lq"].as_u64().unwrap(), 3200);
}

#[test]
fn unknown_flags_and_attacks_exit_two() {
    let out = ghzkd(&["--command", "run", "--frequency", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ghzkd(&["--command", "detect", "--attack", "warp-field"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown attack"));
}

#[test]
fn csv_format_emits_rows() {
    let out = ghzkd(&[
        "--command", "run", "--n", "2", "--tau", "1", "--format", "csv", "--seed", "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("index,"));
    assert_eq!(text.lines().count(), 8 * 3 + 1);
}

#[test]
fn entangle_measure_preset_reads_matrix_files() {
    use ghzkd::adversary::{format_entangle_measure, EntangleMeasureSpec};
    let dir = std::env::temp_dir().join("ghzkd-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("compliant.mat");
    std::fs::write(&path, format_entangle_measure(&EntangleMeasureSpec::compliant(4))).unwrap();
    let preset = format!("entangle-measure:{}", path.display());
    let out = ghzkd(&["--command", "detect", "--attack", &preset, "--sessions", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let exact = report["results"]["per_particle_exact"].as_f64().unwrap();
    assert!(exact.abs() < 1e-12);
    std::fs::remove_file(path).ok();
}

#[test]
fn out_dir_env_relocates_relative_outputs() {
    let dir = std::env::temp_dir().join("ghzkd-outdir-test");
    std::fs::create_dir_all(&dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ghzkd"))
        .args(["--command", "efficiency", "--n", "8", "--tau", "1", "--out", "eff.json"])
        .env("GHZKD_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = dir.join("eff.json");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&written).unwrap()).unwrap();
    assert_eq!(report["results"]["lk"].as_u64().unwrap(), 24);
    std::fs::remove_file(written).ok();
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = [
        "--command", "detect", "--attack", "intercept-resend-c", "--n", "1", "--tau", "1",
        "--sessions", "200", "--seed", "11",
    ];
    let first = ghzkd(&args);
    let second = ghzkd(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}
