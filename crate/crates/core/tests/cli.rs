use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use axisym::cli::io::{Checkpoint, Manifest};

fn axisym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axisym")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a config whose output goes to `<tmp>/<name>` and returns its path.
fn config(tmp: &Path, name: &str, body: &str) -> PathBuf {
    let path = tmp.join(format!("{name}.toml"));
    let out = tmp.join(name);
    fs::write(&path, format!("{body}\n[output]\ndir = {:?}\n", out.to_str().unwrap())).unwrap();
    path
}

fn run_ok(tmp: &Path, name: &str, body: &str) -> PathBuf {
    let cfg = config(tmp, name, body);
    let o = axisym(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    tmp.join(name)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

const SWIRL: &str = "[simulation]\nnr = 12\nnz = 12\nT = 0.05\nrecord_every = 5\n[scenario]\nname = \"swirl_decay\"";

#[test]
fn rest_run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(tmp.path(), "rest", "[simulation]\nnr = 8\nnz = 8\nT = 0.01\nrecord_every = 2");
    let (header, rows) = read_csv(&dir.join("timeseries.csv"));
    assert_eq!(
        &header[..9],
        ["t", "v_l2", "grad_v_l2_cum", "u_inf", "gamma_l2", "phi_l2", "x", "cfl", "elliptic_residual"]
    );
    assert!(rows.len() >= 2);
    assert!(rows.iter().flatten().skip(1).all(|v| *v == 0.0 || v.is_finite()));

    let manifest = Manifest::parse(&fs::read_to_string(dir.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!((manifest.status.as_str(), manifest.nr, manifest.nz), ("completed", 8, 8));
    assert_eq!(manifest.scheme, "imex1");
    assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest.config_sha256.len(), 64);

    let cp = Checkpoint::from_bytes(&fs::read(dir.join("checkpoint.bin")).unwrap()).unwrap();
    assert_eq!((cp.nr, cp.nz, cp.t), (8, 8, 0.01));
    assert!(cp.u.iter().chain(&cp.gamma).chain(&cp.psi1).all(|v| *v == 0.0));
    assert!(fs::read_to_string(dir.join("config.toml")).unwrap().contains("T = 0.01"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "typo", "[simulation]\nNx = 16");
    let o = axisym(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Nx"), "{}", stderr(&o));
    assert!(!tmp.path().join("typo").exists());
}

#[test]
fn missing_config_and_bad_usage_exit_two() {
    assert_eq!(code(&axisym(&["run", "/nonexistent/config.toml"])), 2);
    assert_eq!(code(&axisym(&["launch"])), 2);
    assert_eq!(code(&axisym(&["report"])), 2);
}

#[test]
fn cfl_violation_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    // the manufactured flow needs dt below about 2e-2 at this grid
    let cfg = config(
        tmp.path(),
        "cfl",
        "[simulation]\nnr = 16\nnz = 16\ndt = 2.0\nT = 4.0\n[scenario]\nname = \"manufactured_full\"",
    );
    let o = axisym(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let dir = tmp.path().join("cfl");
    let manifest = Manifest::parse(&fs::read_to_string(dir.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest.status, "failed");
    assert_eq!(manifest.failing_step, Some(1));
    assert_eq!(manifest.failing_time, Some(0.0));
    assert!(manifest.error.unwrap().contains("CFL"));
    // an incomplete run cannot be certified
    assert_eq!(code(&axisym(&["check", dir.to_str().unwrap()])), 2);
}

#[test]
fn check_passes_on_rest_and_swirl_decay() {
    let tmp = tempfile::tempdir().unwrap();
    let rest = run_ok(tmp.path(), "rest", "[simulation]\nnr = 8\nnz = 8\nT = 0.01");
    let o = axisym(&["check", rest.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(rest.join("certificate.txt")).unwrap();
    assert!(text.contains("all strict entries pass"));
    // every tracked entry is trivial: both sides vanish
    assert!(!text.lines().any(|l| l.contains("| tracked | tracked |")), "{text}");

    let swirl = run_ok(tmp.path(), "swirl", SWIRL);
    let o = axisym(&["check", swirl.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(swirl.join("certificate.txt")).unwrap();
    assert!(text.contains("swirl_max_principle | strict | pass"));
    assert!(text.contains("hardy_beta1 | strict | pass"));
}

#[test]
fn tampered_swirl_fails_the_maximum_principle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_ok(tmp.path(), "tamper", SWIRL);
    let path = dir.join("timeseries.csv");
    let mut r = csv::Reader::from_path(&path).unwrap();
    let header = r.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "u_inf").unwrap();
    let mut rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    let last = rows.len() - 1;
    let bumped = rows[0][col].parse::<f64>().unwrap() * 1.5;
    let mut fields: Vec<String> = rows[last].iter().map(str::to_string).collect();
    fields[col] = bumped.to_string();
    rows[last] = csv::StringRecord::from(fields);
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(&header).unwrap();
    for row in &rows {
        w.write_record(row).unwrap();
    }
    w.flush().unwrap();
    drop(w);

    let o = axisym(&["check", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("timeseries.csv does not match"));
    let text = fs::read_to_string(dir.join("certificate.txt")).unwrap();
    assert!(text.contains("swirl_max_principle | strict | fail"), "{text}");
    assert!(text.contains("strict failures: swirl_max_principle"));
}

#[test]
fn check_without_artifacts_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&axisym(&["check", tmp.path().to_str().unwrap()])), 2);
    let dir = run_ok(tmp.path(), "partial", "[simulation]\nnr = 8\nnz = 8\nT = 0.01");
    fs::remove_file(dir.join("checkpoint.bin")).unwrap();
    assert_eq!(code(&axisym(&["check", dir.to_str().unwrap()])), 2);
    assert_eq!(code(&axisym(&["report", dir.to_str().unwrap()])), 2);
}

#[test]
fn run_and_check_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_ok(tmp.path(), "a", SWIRL);
    let b = run_ok(tmp.path(), "b", SWIRL);
    for file in ["timeseries.csv", "checkpoint.bin"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    assert_eq!(code(&axisym(&["check", a.to_str().unwrap()])), 0);
    let first = fs::read(a.join("certificate.txt")).unwrap();
    assert_eq!(code(&axisym(&["check", a.to_str().unwrap()])), 0);
    assert_eq!(first, fs::read(a.join("certificate.txt")).unwrap());
}

#[test]
fn output_root_override_relocates_relative_dirs() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("root");
    let cfg = tmp.path().join("rel.toml");
    fs::write(&cfg, "[simulation]\nnr = 8\nnz = 8\nT = 0.01\n[output]\ndir = \"nested/run\"\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_axisym"))
        .args(["run", cfg.to_str().unwrap()])
        .env("AXISYM_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(root.join("nested/run/manifest.toml").exists());

    // without the override the directory sits next to the config
    let o = Command::new(env!("CARGO_BIN_EXE_axisym"))
        .args(["run", cfg.to_str().unwrap()])
        .env_remove("AXISYM_OUTPUT_ROOT")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("nested/run/manifest.toml").exists());
}

#[test]
fn report_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let rest = run_ok(tmp.path(), "rest", "[simulation]\nnr = 8\nnz = 8\nT = 0.01");
    assert_eq!(code(&axisym(&["report", rest.to_str().unwrap()])), 0);
    let (_, x) = read_csv(&rest.join("report/x_trajectory.csv"));
    assert!(x.iter().all(|row| row[1] == 0.0));
    let (header, energy) = read_csv(&rest.join("report/energy_budget.csv"));
    assert_eq!(header[0], "t");
    assert!(energy.iter().all(|row| row[1..].iter().all(|v| *v == 0.0)));

    let coarse = run_ok(tmp.path(), "coarse", SWIRL);
    let fine = run_ok(tmp.path(), "fine", &SWIRL.replace("nr = 12\nnz = 12", "nr = 16\nnz = 16"));
    let out = tmp.path().join("cmp");
    let o = axisym(&["report", fine.to_str().unwrap(), coarse.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, x) = read_csv(&fine.join("report/x_trajectory.csv"));
    assert!(x.windows(2).all(|w| w[1][1] >= w[0][1]));
    let (_, lambda) = read_csv(&fine.join("report/lambda.csv"));
    assert_eq!(lambda.len(), 3);
    assert!(lambda.iter().all(|row| row[1] <= row[2] + 1e-12));
    let (header, ratios) = read_csv(&out.join("ratios_vs_resolution.csv"));
    assert_eq!(header, ["name", "mode", "12x12", "16x16"]);
    assert!(ratios.iter().all(|row| row.len() == 4));
    let mut r = csv::Reader::from_path(out.join("ratios_vs_resolution.csv")).unwrap();
    let row = r.records().map(Result::unwrap).find(|rec| &rec[0] == "h2").unwrap();
    let (a, b): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
    assert!((a / b - 1.0).abs() < 0.2, "{a} {b}");
}
