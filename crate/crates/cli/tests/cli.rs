use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use uwbsim_cli::run::Manifest;
use uwbsim_cli::spec::parse_spec_value;

fn uwbsim(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uwbsim"));
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("UWB_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn awgn_spec(out: &Path) -> String {
    format!(
        r#"{{"bit_energy": 0.5, "interferer_energy": 1, "mode": "chip_sync",
            "analytic_modes": ["awgn_sync", "awgn_async"],
            "n_drops": 8, "symbols_per_drop": 250, "seed": 17,
            "sweep": {{"variable": "sinr_db", "values": [0, 2, 4]}},
            "output_path": {:?}}}"#,
        out.display().to_string()
    )
}

#[test]
fn analyze_writes_csv_and_round_tripping_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/analytic.csv");
    let spec = write_spec(dir.path(), "spec.json", &awgn_spec(&csv));
    let out = uwbsim(&["analyze", spec.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sweep_var,value,mode,bep,ci_low,ci_high,trials,seed");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[0], "sinr_db");
        assert_eq!(r[6], "", "analytic rows carry no trial count");
        assert_eq!(r[7], "17");
    }

    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/analytic.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest.tool_version, env!("CARGO_PKG_VERSION"));
    assert!(manifest.wall_time_s >= 0.0);
    let echoed = parse_spec_value(serde_json::to_value(&manifest.spec).unwrap()).unwrap();
    assert_eq!(echoed, manifest.spec);

    // Re-running the echoed spec reproduces the report byte for byte.
    let again = write_spec(dir.path(), "echo.json", &serde_json::to_string(&manifest.spec).unwrap());
    std::fs::remove_file(&csv).unwrap();
    assert!(uwbsim(&["analyze", again.to_str().unwrap()], None).status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);
}

#[test]
fn simulate_is_bit_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let spec = write_spec(dir.path(), "spec.json", &awgn_spec(&csv));
    let spec = spec.to_str().unwrap();
    let mut reports = Vec::new();
    for workers in ["1", "3", "1"] {
        let out = uwbsim(&["simulate", spec], Some(workers));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read_to_string(&csv).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
    let first = reports[0].lines().nth(1).unwrap();
    assert!(first.starts_with("sinr_db,0,simulated,"));
    assert!(first.ends_with(",2000,17"));
}

#[test]
fn seed_override_and_compare_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cmp.csv");
    let spec = write_spec(dir.path(), "spec.json", &awgn_spec(&csv));
    let out = uwbsim(&["compare", spec.to_str().unwrap(), "--seed", "99"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("sweep_var,value,mode,bep,ci_low,ci_high,trials,seed,rel_error\n"));
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        assert_eq!(r[7], "99");
        if r[2] == "simulated" {
            assert_eq!(r[8], "");
        } else {
            let rel: f64 = r[8].parse().unwrap();
            assert!(rel.is_finite());
        }
    }
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cmp.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.spec.seed, 99);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(
        dir.path(),
        "bad.json",
        r#"{"sweep": {"variable": "sinr_db", "values": [3, 1, 2]}, "simulate": true}"#,
    );
    let out = uwbsim(&["simulate", bad.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));

    let unknown = write_spec(dir.path(), "unknown.json", r#"{"sweep": {"variable": "sinr_db", "values": [0]}, "colour": 1}"#);
    let out = uwbsim(&["analyze", unknown.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let missing = dir.path().join("nope.json");
    let out = uwbsim(&["analyze", missing.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));

    let out = uwbsim(&["validate-lemmas", "--lemma", "9"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_single_lemma() {
    let out = uwbsim(&["validate-lemmas", "--lemma", "2", "--symbols", "20000"], None);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("PASS"));
}
