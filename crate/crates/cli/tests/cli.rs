use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn molrelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_molrelay"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(command: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    molrelay(&args)
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn arrivals_single_symbol_has_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "k = 1\n");
    let o = run("arrivals", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path().join("arrivals.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "age,offset,q");
    assert!(lines[1].starts_with("1,0,0.6758271804"));
    assert!(!csv.contains('\r'));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "k = 2\nsnr = 3\n");
    let o = run("arrivals", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("snr") && err.contains("line 2"), "{err}");
}

#[test]
fn out_of_range_prior_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "beta = 1.5\n");
    let o = run("roc", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta"), "{}", stderr(&o));
    assert!(!dir.path().join("roc.csv").exists());
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run("arrivals", &dir.path().join("absent.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreachable_tolerance_is_a_numeric_error() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "k = 2\nquad_tol = 1e-300\n");
    let o = run("arrivals", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("q(offset="), "{}", stderr(&o));
}

#[test]
fn roc_and_summary_headers() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "q1 = 60\nroc_pf_targets = [0.01, 0.05]\n");
    let o = run("roc", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let roc = read(dir.path().join("roc.csv"));
    assert!(roc.starts_with("gamma,pf,pd\n"));
    assert_eq!(roc.lines().count(), 401);
    let summary = read(dir.path().join("roc_summary.csv"));
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "pf_target,pd");
    let pd: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((pd - 0.8).abs() <= 0.1, "pd = {pd}");
    assert_eq!(rows.len(), 3);
}

#[test]
fn capacity_sweep_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "");
    let o = run("capacity", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path().join("capacity.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "sigma2_o,relay_pd,relay_pf,beta_star,capacity_bits_per_slot");
    assert_eq!(lines.len(), 11);
    assert!(lines[1].starts_with("1,0.99,0.01,"));
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "trials = 20000\n");
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        let o = run("simulate", &cfg, out, &["--seed", "42"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(run("simulate", &cfg, &c, &["--seed", "43"]).status.code(), Some(0));
    for name in ["sim.csv", "sim_meta.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_ne!(read(a.join("sim.csv")), read(c.join("sim.csv")));
    let sim = read(a.join("sim.csv"));
    assert!(sim.starts_with("slot,gamma,pd,pd_se,pd_formula,pf,pf_se,pf_formula\n"));
    assert_eq!(sim.lines().count(), 12);
    assert!(sim.lines().last().unwrap().starts_with("avg,"));
    assert!(read(a.join("sim_meta.csv")).contains("seed,42\n"));
}

#[test]
fn validate_subset_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "validate_criteria = [1, 3, 4, 5, 8, 9]\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run("validate", &cfg, out, &[]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let csv = fs::read(a.join("validate.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("validate.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("criterion,name,status,detail\n"));
    assert_eq!(text.matches(",PASS,").count(), 6);
}

#[test]
fn validate_fails_with_status_one_when_a_check_fails() {
    // Doubling the relay burst moves the ROC headline numbers out of range.
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "validate_criteria = [4]\nrelay_pd = 0.7\nrelay_pf = 0.3\n");
    let o = run("validate", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(read(dir.path().join("validate.csv")).contains(",FAIL,"));
}

#[test]
fn validate_baseline_passes_every_criterion() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "");
    let o = run("validate", &cfg, dir.path(), &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("10/10 criteria passed"), "{stdout}");
}
