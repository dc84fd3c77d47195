use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracmems(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmems"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("FRAC_MEMS_THREADS")
        .output()
        .unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn psi_table_has_forty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmems(&["psi", "--s", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&dir.path().join("psi.csv"));
    assert_eq!(r[0], ["s", "tau", "value", "est_error"]);
    assert_eq!(r.len(), 41);
    let first: f64 = r[1][2].parse().unwrap();
    let last: f64 = r[40][2].parse().unwrap();
    assert!(first > 0.0 && last < 0.0);
}

#[test]
fn pullin_reruns_identically_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = fracmems(&["pullin", "--s", "0.75", "--dim", "1", "--kappa", "1", "--gamma", "0.5", "--nodes", "96"], &a);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&a.join("pullin.csv"));
    assert_eq!(r[0], ["kappa", "gamma", "lambda_lo", "lambda_hi", "upper_general", "upper_ball", "lower_ball"]);
    let (lo, hi): (f64, f64) = (r[1][2].parse().unwrap(), r[1][3].parse().unwrap());
    assert!(0.0 < lo && lo < hi);

    let manifest = a.join("manifest.txt");
    let o = fracmems(&["pullin", "--config", manifest.to_str().unwrap()], &b);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(a.join("pullin.csv")).unwrap(), fs::read(b.join("pullin.csv")).unwrap());
}

#[test]
fn changed_grid_fails_the_manifest_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmems(&["solve", "--s", "0.6", "--gamma", "0.4", "--lambda", "0.05", "--nodes", "64"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&dir.path().join("summary.csv"));
    assert_eq!(r[0], ["status", "residual", "min_gap", "energy"]);
    assert_eq!(r[1][0], "Converged");
    assert_eq!(rows(&dir.path().join("solution.csv"))[0], ["r", "a", "u", "gap"]);

    let manifest = dir.path().join("manifest.txt");
    let o = fracmems(&["solve", "--config", manifest.to_str().unwrap(), "--nodes", "80"], &dir.path().join("again"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "# run\n[problem]\ns = 0.5\ngamma = half\n").unwrap();
    let o = fracmems(&["pullin", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    let o = fracmems(&["pullin", "--s", "0.5", "--gamma", "0.7"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = fracmems(&["pullin", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn nonexistence_reports_touchdown() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmems(&["nonexist", "--s", "0.75", "--gamma", "0.6", "--nodes", "64"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let runs = rows(&dir.path().join("runs.csv"));
    assert_eq!(runs.len(), 13);
    assert!(runs[1..].iter().all(|r| r[3] == "Touchdown"));
    assert_eq!(rows(&dir.path().join("blowup.csv"))[0], ["rho", "u", "ratio"]);
}

#[test]
fn decay_and_stability_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracmems(&["decay", "--s", "0.6", "--gamma", "0.4", "--nodes", "96"], &dir.path().join("d"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("d/summary.csv"));
    assert_eq!(r[0], ["exponent", "predicted", "log_flag", "r2"]);
    let e: f64 = r[1][0].parse().unwrap();
    assert!((e - 0.4).abs() < 0.05, "{e}");
    assert_eq!(rows(&dir.path().join("d/decay.csv"))[0], ["rho", "u", "ratio"]);

    let o = fracmems(&["stability", "--s", "0.6", "--gamma", "0.4", "--nodes", "64", "--lambda-grid", "0.01,0.04"], &dir.path().join("s"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("s/stability.csv"));
    assert_eq!(r[0], ["lambda", "mu1", "residual"]);
    let mu: Vec<f64> = r[1..].iter().map(|x| x[1].parse().unwrap()).collect();
    assert!(mu[0] > mu[1] && mu[1] > 0.0);
}

#[test]
fn thread_variable_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fracmems"))
        .args(["barrier", "--s", "0.5", "--tau", "0.25", "--threads", "3", "--out-dir"])
        .arg(dir.path())
        .env("FRAC_MEMS_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("threads = 1"), "{manifest}");
    assert_eq!(rows(&dir.path().join("barrier.csv"))[0], ["rho", "value", "ratio"]);
}
