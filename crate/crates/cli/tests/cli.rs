use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn timebin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timebin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rates_at_zero_qber_are_log2_d() {
    let dir = tempfile::tempdir().unwrap();
    let out = timebin(&["rates", "--dims", "2,4,8", "--qbers", "0", "--format", "json", "--out", arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.path().join("rates.json"));
    let rates: Vec<(u64, f64)> = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["d"].as_u64().unwrap(), r["rate"].as_f64().unwrap()))
        .collect();
    assert_eq!(rates, vec![(2, 1.0), (4, 2.0), (8, 3.0)]);
    assert_eq!(doc["schema_version"], 1);
}

#[test]
fn analytic_reference_gives_identity_in_matched_bases() {
    let dir = tempfile::tempdir().unwrap();
    let out = timebin(&["analytic", "--config", arg(&reference_config()), "--out", arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["00", "11"] {
        let doc = read_json(&dir.path().join(format!("probabilities_{name}.json")));
        for (i, row) in doc["probabilities"].as_array().unwrap().iter().enumerate() {
            for (j, p) in row.as_array().unwrap().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.as_f64().unwrap() - want).abs() < 1e-9);
            }
        }
    }
    for name in ["01", "10"] {
        let doc = read_json(&dir.path().join(format!("probabilities_{name}.json")));
        for p in doc["probabilities"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()) {
            assert!((p.as_f64().unwrap() - 0.25).abs() < 1e-9);
        }
    }
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["report"]["rate"], 2.0);
    assert_eq!(report["seed"], 42);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = timebin(&[
            "simulate",
            "--config",
            arg(&reference_config()),
            "--seed",
            "42",
            "--shots",
            "5000",
            "--out",
            arg(dir.path()),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "counts_00.csv"));
    assert!(names.iter().any(|n| n == "probabilities_11.json"));
    assert!(names.iter().any(|n| n == "report.json"));
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
    let csv = fs::read_to_string(a.path().join("counts_01.csv")).unwrap();
    assert!(csv.starts_with("# schema_version: 1\n# config_sha256: "));
    assert!(csv.contains("# seed: 42\nalpha,beta,i,j,count\n"));
}

#[test]
fn bad_config_reports_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "dimension = 4\n[hardware]\ntheta_deg = 120.0\n").unwrap();
    let out = timebin(&["analytic", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["code"], "domain");
    assert_eq!(err["context"]["name"], "theta_deg");
    assert!(err["message"].is_string());
}

#[test]
fn degenerate_delays_report_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = timebin(&["analytic", "--param", "hardware.coarse_delays_ns=[2.6, 2.6]", "--out", arg(dir.path())]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["code"], "degenerate_routing");
}

#[test]
fn validate_passes_on_reference_and_degraded_setups() {
    let dir = tempfile::tempdir().unwrap();
    for params in [vec![], vec!["--param", "hardware.delta_phi_deg=150", "--param", "dimension=8"]] {
        let mut args = vec!["validate", "--samples", "20", "--out", arg(dir.path())];
        args.extend(params);
        let out = timebin(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(read_json(&dir.path().join("validation.json"))["passed"], true);
    }
}

#[test]
fn sweep_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = timebin(&[
        "sweep",
        "--sweep-param",
        "hardware.delta_phi_deg",
        "--from",
        "90",
        "--to",
        "180",
        "--steps",
        "5",
        "--out",
        arg(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 5);
    let last: Vec<f64> = rows[4].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[..3], [180.0, 0.0, 2.0]);
}

#[test]
fn stage_one_pi_phase_is_undone_by_the_correction() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/stage1_pi_compensated.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = timebin(&["analytic", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&dir.path().join("report.json"))["report"]["qber"], 0.0);

    let out = timebin(&["analytic", "--config", arg(&cfg), "--param", "hardware.phase_correction_deg=[]", "--out", arg(dir.path())]);
    assert!(out.status.success());
    assert!(read_json(&dir.path().join("report.json"))["report"]["qber"].as_f64().unwrap() > 0.1);
}
