use std::fs;
use std::path::Path;
use std::process::Command;

use hydrochain_cli::config::ExperimentConfig;
use hydrochain_cli::{execute, RunOptions};
use tempfile::TempDir;

const HYDRO: &str = r#"
schema_version = 1
kind = "hydro"
n_list = [16, 32]
ensemble_size = 24
t_end = 0.02
t_snapshots = [0.0, 0.01, 0.02]
tau0 = { type = "cosine", mean = 1.0, amplitude = 0.5, mode = 1 }
seed = 5
"#;

const EQUILIBRIUM: &str = r#"
schema_version = 1
kind = "equilibrium"
n_list = [16]
ensemble_size = 64
t_end = 0.02
t_snapshots = [0.0, 0.02]
temperature0 = { type = "constant", value = 0.5 }
seed = 6
"#;

const WIGNER: &str = r#"
schema_version = 1
kind = "wigner_le"
n_list = [16]
ensemble_size = 16
t_end = 0.8
lambdas = [10.0]
eta_max = 1
tau0 = { type = "cosine", mean = 1.0, amplitude = 0.5, mode = 1 }
seed = 7
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hydrochain"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run_cli(body: &str, extra: &[&str]) -> (TempDir, std::process::Output) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), body);
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .args(extra)
        .current_dir(dir.path())
        .env("HYDROCHAIN_OUT", "out")
        .output()
        .unwrap();
    (dir, out)
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join("out").join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn usage_errors_exit_with_two() {
    let (_d, out) = run_cli(&HYDRO.replace("n_list = [16, 32]", "n_list = []"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_list"));

    let (_d, out) = run_cli(&format!("{HYDRO}\nunknown_key = 3\n"), &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["run", "/nonexistent/exp.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["verify-matrix", "--preset", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn event_budget_is_enforced() {
    let (dir, out) = run_cli(HYDRO, &["--max-events", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceed"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn hydro_run_writes_artifacts() {
    let (dir, out) = run_cli(HYDRO, &[]);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("hydro_r_error"));

    let csv = String::from_utf8(read(dir.path(), "results.csv")).unwrap();
    assert!(csv.starts_with("n,t,quantity,index,value,stderr"));
    assert!(csv.lines().any(|l| l.contains("r_l2_error")));

    let report: serde_json::Value = serde_json::from_slice(&read(dir.path(), "report.json")).unwrap();
    assert_eq!(report["kind"], "hydro");
    assert_eq!(report["seed"], 5);
    assert_eq!(report["config"]["n_list"], serde_json::json!([16, 32]));
    let passed = report["passed"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if passed { 0 } else { 1 }));

    let plots: Vec<_> = fs::read_dir(dir.path().join("out/plots")).unwrap().collect();
    assert!(!plots.is_empty());
    let svg = String::from_utf8(read(dir.path(), "plots/elongation_error.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn same_seed_reproduces_bytes_across_thread_counts() {
    let (a, _) = run_cli(HYDRO, &["--threads", "1"]);
    let (b, _) = run_cli(HYDRO, &["--threads", "3"]);
    let (c, _) = run_cli(HYDRO, &["--threads", "1", "--seed", "99"]);
    for f in ["results.csv", "report.json", "profiles.csv", "plots/elongation_profile.svg"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    assert_ne!(read(a.path(), "results.csv"), read(c.path(), "results.csv"));
}

#[test]
fn timestamps_only_when_not_deterministic() {
    let (a, _) = run_cli(EQUILIBRIUM, &["--deterministic", "false"]);
    let svg = String::from_utf8(read(a.path(), "plots/thermal_spectrum.svg")).unwrap();
    assert!(svg.contains("unix time"));
    let (b, _) = run_cli(EQUILIBRIUM, &["--deterministic"]);
    let svg = String::from_utf8(read(b.path(), "plots/thermal_spectrum.svg")).unwrap();
    assert!(!svg.contains("unix time"));
}

#[test]
fn equilibrium_and_wigner_runs_through_the_library() {
    for body in [EQUILIBRIUM, WIGNER] {
        let dir = TempDir::new().unwrap();
        let cfg = ExperimentConfig::from_toml(body).unwrap();
        let opts = RunOptions {
            deterministic: true,
            output_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        let outcome = execute(cfg, &opts).unwrap();
        assert_eq!(outcome.output_dir, dir.path());
        assert!(!outcome.output.checks.is_empty());
        assert!(outcome.output.checks.iter().all(|c| c.observed.is_finite()));
        for f in &outcome.files {
            assert!(f.exists(), "{}", f.display());
        }
        assert!(dir.path().join("report.json").exists());
    }
}

#[test]
fn wigner_export_has_all_species() {
    let dir = TempDir::new().unwrap();
    let opts = RunOptions {
        deterministic: true,
        output_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    execute(ExperimentConfig::from_toml(WIGNER).unwrap(), &opts).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("wigner.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let species = header.iter().position(|h| h == "species").unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for rec in rdr.records() {
        seen.insert(rec.unwrap()[species].to_string());
    }
    assert_eq!(seen.len(), 4, "{seen:?}");
}

#[test]
fn verify_matrix_preset_passes() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .arg("verify-matrix")
        .env("HYDROCHAIN_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["summary"]["det_sampling"].is_object());
}
