use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
j1 = 1.5
j2 = 2.0
epsilon = 0.05
k_list = [0.5, 3.0]
kicks = 400
asymptotic_window = [200, 400]
fit_window = 10
seed = 5
output_dir = "unused"
asymptotic_samples = 16

[ensemble]
kind = "both"
count = 6

[classical]
n_points = 4
n_steps = 1000

[moments]
j_list = [0.5, 1.0]
samples = 500
"#;

fn kicktops(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kicktops"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = kicktops(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, CONFIG).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn output_is_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for cmd in ["evolve", "rates", "asymptotic", "eigen", "classical", "moments"] {
        run_ok(&[cmd, "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]);
        run_ok(&[cmd, "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "3"]);
    }
    // The copied config.toml records the differing output paths.
    let csv_lines = |dir: &Path| -> Vec<String> {
        let text = fs::read_to_string(dir.join("manifest")).unwrap();
        text.lines().filter(|l| !l.ends_with("config.toml")).map(String::from).collect()
    };
    assert_eq!(csv_lines(&a), csv_lines(&b));
    let manifest_a = csv_lines(&a).join("\n");
    for name in ["evolution.csv", "rates.csv", "asymptotic.csv", "eigen.csv", "lyapunov.csv", "moments.csv"] {
        assert!(manifest_a.contains(name), "{name} missing from manifest");
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn every_row_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    run_ok(&["asymptotic", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let manifest = fs::read_to_string(out.join("manifest")).unwrap();
    let hash = manifest.lines().next().unwrap().strip_prefix("config_hash ").unwrap().to_string();
    let text = fs::read_to_string(out.join("asymptotic.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with(
        "k,epsilon,mean_eigen_entropy,lower_bound,measured_asymptotic_su2,measured_asymptotic_sud,min_gap"
    ));
    assert!(header.contains("coupling_scale"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ends_with(&hash) && r.contains(",geometric,")));
}

#[test]
fn warm_cache_reproduces_cold_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    let args = ["eigen", "--config", &cfg, "--out", out.to_str().unwrap()];
    run_ok(&args);
    let cold = fs::read(out.join("eigen.csv")).unwrap();
    assert!(fs::read_dir(out.join("cache")).unwrap().count() >= 4);
    run_ok(&args);
    assert_eq!(cold, fs::read(out.join("eigen.csv")).unwrap());
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = run_ok(&["config", "--config", &cfg, "--seed", "99", "--k", "1,2.5", "--ensemble", "su2", "--kicks", "100"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 99"));
    assert!(text.contains("k_list = [1.0, 2.5]"));
    assert!(text.contains("kind = \"su2\""));
    assert!(text.contains("kicks = 100"));
    assert!(text.contains("asymptotic_window = [50, 100]"));
}

#[test]
fn invalid_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, CONFIG.replace("fit_window = 10", "fit_window = 2")).unwrap();
    let out = kicktops(&["evolve", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fit_window"));
    assert!(!kicktops(&["evolve", "--ensemble", "bogus"]).status.success());
}
