//! End-to-end CLI checks: experiment listing, config failure modes, run
//! artifacts, and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kgslab"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kgslab-cli-{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn list_experiments_names_all_ten() {
    let out = bin().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "resonance-verify",
        "strichartz-sweep",
        "bilinear-sweep",
        "trilinear-sweep",
        "transversality",
        "summation-check",
        "solve",
        "picard",
        "scatter-diag",
        "vnorm-selftest",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tmpdir("badcfg");
    let cfg = dir.join("bad.toml");

    std::fs::write(&cfg, "").unwrap();
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment required"));

    std::fs::write(&cfg, "experiment = \"solve\"\nseed = 1\nwhatever = 3\n").unwrap();
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "unknown keys fail closed");

    std::fs::write(
        &cfg,
        "experiment = \"strichartz-sweep\"\nseed = 1\nk_list = [-20, 20]\n",
    )
    .unwrap();
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("Nyquist octave"),
        "error names the limiting grid parameter"
    );
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn run_writes_artifacts_and_reports_status() {
    let dir = tmpdir("run");
    let cfg = dir.join("cfg.toml");
    std::fs::write(
        &cfg,
        "experiment = \"summation-check\"\nseed = 3\ntrials = 40\n",
    )
    .unwrap();
    let out_dir = dir.join("artifacts");
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("summation.csv").exists());
    assert!(out_dir.join("summary.json").exists());
    assert!(out_dir.join("manifest.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn failing_criteria_exit_nonzero_with_artifacts() {
    let dir = tmpdir("fail");
    let cfg = dir.join("cfg.toml");
    // Large data trips the instability/reflectivity guards.
    std::fs::write(
        &cfg,
        "experiment = \"solve\"\nseed = 1\nr_max = 32.0\nn_points = 255\nt_window = 4.0\ndt = 0.125\ndata_delta = 10.0\n",
    )
    .unwrap();
    let out_dir = dir.join("artifacts");
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // Partial failure still produces artifacts.
    assert!(out_dir.join("diagnostics.csv").exists());
    assert!(out_dir.join("summary.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
}
