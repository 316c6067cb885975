//! End-to-end checks of the command-line surface: exit codes, JSON/CSV
//! shapes, run manifests and rerun determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geoparc"))
}

fn write_law(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("geoparc-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn classify_reports_phase_and_q_c() {
    let dir = tempdir("classify");
    let law = write_law(&dir, "geo02.json", r#"{"family": "geometric", "alpha": 0.2}"#);

    let out = bin().args(["classify", "--law"]).arg(&law).args(["--q", "0.52"]).output().unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["phase"], "subcritical");
    assert!((doc["q_c"].as_f64().unwrap() - 0.5451754).abs() < 1e-7);

    let out = bin().args(["classify", "--law"]).arg(&law).args(["--q", "0.56"]).output().unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["phase"], "supercritical");
}

#[test]
fn classify_supercritical_binary_has_no_q_c() {
    let dir = tempdir("binary");
    let law = write_law(&dir, "bin05.json", r#"{"family": "binary", "alpha": 0.5}"#);
    let out = bin().args(["classify", "--law"]).arg(&law).args(["--q", "0.9"]).output().unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["phase"], "supercritical");
    assert!(doc["q_c"].is_null());
}

#[test]
fn out_of_range_q_exits_2() {
    let dir = tempdir("badq");
    let law = write_law(&dir, "geo02.json", r#"{"family": "geometric", "alpha": 0.2}"#);
    let out = bin().args(["classify", "--law"]).arg(&law).args(["--q", "0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("q"), "stderr: {err}");
}

#[test]
fn bad_law_file_exits_2() {
    let dir = tempdir("badlaw");
    let law = write_law(&dir, "bad.json", r#"{"family": "poisson", "alpha": 0.3, "rho": 2}"#);
    let out = bin().args(["classify", "--law"]).arg(&law).args(["--q", "0.6"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn threshold_curve_matches_closed_form() {
    let dir = tempdir("curve");
    let out_path = dir.join("curve.csv");
    let out = bin()
        .args(["threshold-curve", "--family", "geometric", "--alpha-grid", "0.05:0.30:0.05"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("alpha,t_c,criterion,q_c"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let alpha: f64 = fields[0].parse().unwrap();
        let q_c: f64 = fields[3].parse().unwrap();
        let closed = 0.5 * (1.0 + (1.0 - 3.0 * alpha).powf(1.5) / (1.0 + 9.0 * alpha));
        assert!((q_c - closed).abs() <= 1e-9, "alpha={alpha}: {q_c} vs {closed}");
    }
    // A run manifest sits next to the output.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("curve.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["command"], "threshold-curve");
}

#[test]
fn infeasible_alphas_emit_empty_q_c() {
    let dir = tempdir("curve-inf");
    let out_path = dir.join("bin.csv");
    let out = bin()
        .args(["threshold-curve", "--family", "binary", "--alpha-grid", "0.25:0.45:0.10"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows[0].split(',').nth(3).unwrap().len() > 1, "alpha 0.25 is feasible");
    assert_eq!(rows[1].split(',').nth(3), Some(""), "alpha 0.35 is not");
}

#[test]
fn oracle_command_reports_agreement() {
    let dir = tempdir("oracle");
    let law = write_law(&dir, "bin02.json", r#"{"family": "binary", "alpha": 0.2}"#);
    let out_path = dir.join("oracle.csv");
    let out = bin()
        .args(["oracle", "--law"])
        .arg(&law)
        .args(["--nmax", "4", "--kmax", "2", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("n,k,oracle,tutte,delta,mode\n"));
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",rational"));
        let delta: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(delta, 0.0, "line {line}");
    }
}

#[test]
fn simulate_is_deterministic_across_reruns() {
    let dir = tempdir("simulate");
    let law = write_law(&dir, "geo02.json", r#"{"family": "geometric", "alpha": 0.2}"#);
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    for out_path in [&a, &b] {
        let out = bin()
            .args(["simulate", "--law"])
            .arg(&law)
            .args(["--q", "0.52", "--samples", "2000", "--cap-height", "15", "--seed", "42"])
            .arg("--out")
            .arg(out_path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&a).unwrap();
    let b = std::fs::read(&b).unwrap();
    assert_eq!(a, b, "identical seeds must give identical bytes");
}

#[test]
fn simulate_accepts_config_file() {
    let dir = tempdir("simcfg");
    let config = write_law(
        &dir,
        "exp.json",
        r#"{"law": {"family": "geometric", "alpha": 0.2},
            "q": 0.54, "samples": 500, "cap_height": 10, "K": 4, "seed": 7}"#,
    );
    let out_path = dir.join("stats.csv");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("stat,k_or_n,value,stderr\n"));
    assert!(csv.contains("survival,"));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("stats.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 7);
}
