//! End-to-end tests of the `srsim` binary: exit codes, output determinism,
//! the shared column contract, and the diff/sweep verbs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const COLUMNS: &str =
    "t_g,sz,n,re_c0,im_c0,czz,gamma_se,gamma_ste,gamma_ce,gamma_tot,witness,purity,dicke_overlap";

fn srsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn base_config(n: usize, solver: &str, ic: &str) -> String {
    format!(
        "n_emitters = {n}\nkappa_over_g = 20.0\ngamma_over_g = 1.0\n\
         gamma_phi_over_g = 0.0\ndetuning_over_g = 0.0\n\
         initial_condition = \"{ic}\"\nt_end_g = 2.0\nn_samples = 51\n\
         solver = \"{solver}\"\n"
    )
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "pair.toml", &base_config(2, "both", "fully_inverted"));
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = srsim(&["run", config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    }
    for file in ["pair_cluster.csv", "pair_exact.csv"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn outputs_follow_the_column_contract() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "tiny.toml", &base_config(3, "cluster", "fully_inverted"));
    let out = srsim(&["run", config.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("tiny.csv")).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# config_hash="), "metadata line: {meta}");
    assert!(meta.contains("version="));
    assert_eq!(lines.next().unwrap(), COLUMNS);
    let first = lines.next().unwrap();
    // cluster runs leave the density-matrix-only columns empty
    assert!(first.ends_with(",,"), "row: {first}");
    assert_eq!(first.split(',').count(), COLUMNS.split(',').count());
    assert_eq!(text.lines().count(), 2 + 51);
    let manifest = std::fs::read_to_string(dir.path().join("tiny_manifest.json")).unwrap();
    assert!(manifest.contains("config_hash"));
    assert!(manifest.contains("tiny.csv"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{}mystery_knob = 1\n", base_config(3, "cluster", "fully_inverted"));
    let config = write_config(dir.path(), "typo.toml", &body);
    let out = srsim(&["run", config.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2, "stdout: {}", stdout(&out));
    assert!(stderr(&out).contains("mystery_knob"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = base_config(3, "cluster", "fully_inverted").replace("n_samples = 51\n", "");
    let config = write_config(dir.path(), "partial.toml", &body);
    let out = srsim(&["run", config.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("n_samples"), "stderr: {}", stderr(&out));
}

#[test]
fn oversized_exact_system_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "huge.toml", &base_config(20, "exact", "fully_inverted"));
    let out = srsim(&["run", config.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn photon_preparation_needs_the_exact_solver() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "fock.toml", &base_config(2, "cluster", "fock:1"));
    let out = srsim(&["run", config.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn list_scenarios_names_all_four() {
    let out = srsim(&["list-scenarios"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    for name in ["fig1", "fig2", "fig3", "fig4"] {
        assert!(text.contains(name), "missing {name} in: {text}");
    }
}

#[test]
fn sweep_summarizes_each_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "scan.toml", &base_config(4, "cluster", "fully_inverted"));
    let out = srsim(&[
        "sweep",
        config.to_str().unwrap(),
        "--gamma",
        "0.5:1.5:3",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("scan_sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_hash="));
    assert_eq!(lines[1], "gamma_over_g,min_witness,detected,peak_gamma_tot");
    assert_eq!(lines.len(), 2 + 3);
    for row in &lines[2..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 4);
        let detected: u8 = cells[2].parse().unwrap();
        assert!(detected <= 1);
        assert!(cells[1].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn diff_of_identical_runs_reports_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "same.toml", &base_config(3, "cluster", "dicke:1"));
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = srsim(&["run", config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
        assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    }
    let out = srsim(&[
        "diff",
        out_a.join("same.csv").to_str().unwrap(),
        out_b.join("same.csv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("largest column difference: 0.000000e0"),
        "stdout: {}",
        stdout(&out)
    );
    // manifests compare the same way, resolving files next to each manifest
    let out = srsim(&[
        "diff",
        out_a.join("same_manifest.json").to_str().unwrap(),
        out_b.join("same_manifest.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("same.csv"));
}

#[test]
fn diff_rejects_mismatched_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.csv", "# config_hash=x version=0\nt_g,sz\n0e0,1e0\n");
    let b = write_config(dir.path(), "b.csv", "# config_hash=y version=0\nt_g,n\n0e0,1e0\n");
    let out = srsim(&["diff", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("schema mismatch"), "stderr: {}", stderr(&out));
}

#[test]
fn both_solver_comparison_reports_the_witness_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = srsim(&[
        "run",
        "fig2",
        "--n-emitters",
        "3",
        "--solver",
        "both",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    for stem in ["fig2_fully_inverted", "fig2_fshi", "fig2_dicke"] {
        assert!(dir.path().join(format!("{stem}_cluster.csv")).is_file(), "{stem} cluster file");
        assert!(dir.path().join(format!("{stem}_exact.csv")).is_file(), "{stem} exact file");
    }
    assert!(dir.path().join("fig2_manifest.json").is_file());
    let text = stdout(&out);
    assert_eq!(
        text.matches("max pointwise witness difference").count(),
        3,
        "stdout: {text}"
    );
}

#[test]
fn both_solver_runs_refuse_large_systems() {
    let out = srsim(&["run", "fig2", "--solver", "both", "--out-dir", "/tmp"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("N <= 8"), "stderr: {}", stderr(&out));
}
