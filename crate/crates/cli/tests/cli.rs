use std::path::Path;
use std::process::{Command, Output};

const SK: &str = "[model]\ncoeffs = { 2 = 0.7071067811865476 }\n";

fn parisi(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_parisi"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn eval_matches_replica_symmetric_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("gammas = [0.0, 1.0]\n{SK}k = 0\nq = []\nm = []\n");
    let out = parisi(dir.path(), &cfg, &["eval"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let ln2 = std::f64::consts::LN_2;
    let p0 = v[0]["evaluation"]["p_hat"].as_f64().unwrap();
    let p1 = v[1]["evaluation"]["p_hat"].as_f64().unwrap();
    assert!((p0 - ln2).abs() < 1e-12);
    assert!((p1 - ln2 - 0.25).abs() < 1e-9);
    assert_eq!(v[0]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v[0]["grid"]["intervals"], 1024);
}

#[test]
fn malformed_m_is_a_config_error_naming_the_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("gamma = 1.0\n{SK}k = 3\nq = [0.2, 0.4, 0.6]\nm = [0.7, 0.4]\n");
    let out = parisi(dir.path(), &cfg, &["eval"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("index 1"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = parisi(dir.path(), "gama = 1.0\n", &["rem"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rem_rows_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = parisi(dir.path(), "gammas = [0.5, 1.0, 2.0]\n", &["rem"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gamma,p_rem,regime"));
    let ln2 = std::f64::consts::LN_2;
    let gc = 2.0 * ln2;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let g: f64 = f[0].parse().unwrap();
        let p: f64 = f[1].parse().unwrap();
        let want = if g <= gc {
            ln2 + g / 2.0
        } else {
            (2.0 * g * ln2).sqrt()
        };
        assert!((p - want).abs() < 1e-12, "{line}");
        assert_eq!(f[2], if g <= gc { "high_temp" } else { "low_temp" });
    }
}

#[test]
fn scan_in_the_replica_symmetric_region() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("gammas = [0.5, 0.8]\nsteps = 1\n{SK}");
    let out = parisi(
        dir.path(),
        &cfg,
        &["scan", "--out", dir.path().join("o").to_str().unwrap()],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("o/scan.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("gamma,beta,value,dvalue_fd,int_alpha_xiprime,overlap_moment,max_residual,converged")
    );
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let c: f64 = f[4].parse().unwrap();
        assert!((c - 0.5).abs() < 1e-6, "{line}");
        assert_eq!(f[7], "true");
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "gamma = 2.0\nseed = 5\n{SK}k = 2\nq = [0.25, 0.65]\nm = [0.45]\n[sde]\nn_paths = 2000\nn_steps = 200\n"
    );
    let a = parisi(dir.path(), &cfg, &["sde-check", "--threads", "2"]);
    let b = parisi(dir.path(), &cfg, &["sde-check", "--threads", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn selftest_subset() {
    let out = Command::new(env!("CARGO_BIN_EXE_parisi"))
        .args(["selftest", "--only", "1,2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.contains("PASS")));
}
