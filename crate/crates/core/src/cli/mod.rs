//! Command-line front end: `run` a configured scenario into a run directory,
//! `check` its certificates, `report` plot-ready tables.
//!
//! Exit codes: 0 success, 1 a strict certificate entry failed, 2 bad input or
//! missing artifacts, 3 numerical failure during the run.

pub mod config;
pub mod io;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::certificates::{certificate_report, CertificateReport, Status};
use crate::dynamics::{run_partial, Integrator};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::norms::{cumulative_integral, TimeSeries};

use config::RunConfig;
use io::{
    atomic_write, parse_timeseries_csv, read_artifact, sha256_hex, timeseries_csv, Checkpoint, Manifest, CERTIFICATE_FILE,
    CHECKPOINT_FILE, CONFIG_FILE, MANIFEST_FILE, TIMESERIES_FILE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Subdirectory of a run directory that receives the report tables.
pub const REPORT_DIR: &str = "report";

#[derive(Debug, Parser)]
#[command(name = "axisym", version, about = "Axisymmetric Navier-Stokes runs with estimate certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured scenario and write its run directory.
    Run { config: PathBuf },
    /// Evaluate the certificate ledgers of a completed run.
    Check { dir: PathBuf },
    /// Write plot-ready tables for one or more completed runs.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Where the cross-resolution table goes; defaults to the first run's report directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and dispatches.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Check { dir } => cmd_check(&dir),
        Command::Report { dirs, out } => cmd_report(&dirs, out.as_deref()),
    }
}

fn fail(code: i32, e: &Error) -> i32 {
    eprintln!("error: {e}");
    code
}

pub fn cmd_run(config_path: &Path) -> i32 {
    let (cfg, text) = match RunConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let dir = cfg.run_dir(config_path);
    match execute_run(&cfg, &text, &dir) {
        Ok(manifest) => {
            println!("run directory: {}", dir.display());
            match manifest.error {
                None => {
                    println!("completed {} snapshots up to t = {}", manifest.snapshots, manifest.horizon);
                    EXIT_OK
                }
                Some(err) => {
                    eprintln!(
                        "error: step {} at t = {}: {err}",
                        manifest.failing_step.unwrap_or(0),
                        manifest.failing_time.unwrap_or(0.0)
                    );
                    EXIT_NUMERICAL
                }
            }
        }
        Err(e) => fail(EXIT_INPUT, &e),
    }
}

/// Runs and writes every artifact; numerical failures end up in the manifest,
/// only I/O problems are returned as errors.
pub fn execute_run(cfg: &RunConfig, text: &str, dir: &Path) -> Result<Manifest> {
    let sim = cfg.sim_config();
    fs::create_dir_all(dir)?;
    atomic_write(&dir.join(CONFIG_FILE), text.as_bytes())?;
    let (series, failure) = match run_partial(&sim) {
        Ok(outcome) => (outcome.series, outcome.failure.map(|f| (f.step, f.t, f.error))),
        Err(e) => (TimeSeries::new(), Some((0, 0.0, e))),
    };
    let csv = timeseries_csv(&series)?;
    atomic_write(&dir.join(TIMESERIES_FILE), &csv)?;
    let checkpoint = series.last_state().map(|s| Checkpoint {
        nr: sim.nr,
        nz: sim.nz,
        radius: sim.radius,
        half_height: sim.half_height,
        t: s.t,
        u: s.u.values.clone(),
        gamma: s.gamma.values.clone(),
        psi1: s.psi1.values.clone(),
    });
    let checkpoint_sha256 = match &checkpoint {
        Some(cp) => {
            let bytes = cp.to_bytes();
            atomic_write(&dir.join(CHECKPOINT_FILE), &bytes)?;
            Some(sha256_hex(&bytes))
        }
        None => None,
    };
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(text.as_bytes()),
        scenario: sim.scenario.clone(),
        nr: sim.nr,
        nz: sim.nz,
        radius: sim.radius,
        half_height: sim.half_height,
        scheme: format!("{:?}", sim.scheme).to_lowercase(),
        advection: format!("{:?}", sim.advection).to_lowercase(),
        dt: sim.dt,
        horizon: sim.horizon,
        status: if failure.is_some() { Manifest::FAILED } else { Manifest::COMPLETED }.into(),
        snapshots: series.len(),
        failing_step: failure.as_ref().map(|f| f.0),
        failing_time: failure.as_ref().map(|f| f.1),
        error: failure.as_ref().map(|f| f.2.to_string()),
        timeseries_sha256: sha256_hex(&csv),
        checkpoint_sha256,
        checkpoint_time: checkpoint.as_ref().map(|c| c.t),
    };
    atomic_write(&dir.join(MANIFEST_FILE), manifest.to_text()?.as_bytes())?;
    Ok(manifest)
}

/// A completed run read back from disk.
#[derive(Debug)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub config: RunConfig,
    pub manifest: Manifest,
    pub grid: Grid,
    /// Recorded diagnostics, with the checkpointed state attached to the last snapshot.
    pub series: TimeSeries,
    /// Artifacts whose hashes differ from the manifest.
    pub modified: Vec<String>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest = Manifest::parse(&String::from_utf8_lossy(&read_artifact(dir, MANIFEST_FILE)?))?;
    if manifest.status != Manifest::COMPLETED {
        return Err(Error::Artifact(format!(
            "run in {} did not complete: {}",
            dir.display(),
            manifest.error.as_deref().unwrap_or("unknown failure")
        )));
    }
    let text = String::from_utf8(read_artifact(dir, CONFIG_FILE)?)
        .map_err(|_| Error::Artifact(format!("{CONFIG_FILE} is not text")))?;
    let config = RunConfig::parse(&text)?;
    let csv = read_artifact(dir, TIMESERIES_FILE)?;
    let mut series = parse_timeseries_csv(&csv)?;
    let mut modified = Vec::new();
    if sha256_hex(text.as_bytes()) != manifest.config_sha256 {
        modified.push(CONFIG_FILE.to_string());
    }
    if sha256_hex(&csv) != manifest.timeseries_sha256 {
        modified.push(TIMESERIES_FILE.to_string());
    }
    let sim = config.sim_config();
    let grid = sim.grid()?;
    let cp_bytes = read_artifact(dir, CHECKPOINT_FILE)?;
    if manifest.checkpoint_sha256.as_deref() != Some(sha256_hex(&cp_bytes).as_str()) {
        modified.push(CHECKPOINT_FILE.to_string());
    }
    let cp = Checkpoint::from_bytes(&cp_bytes)?;
    if cp.grid()? != grid {
        return Err(Error::Artifact("checkpoint grid differs from the configuration".into()));
    }
    let last = series.snapshots.len() - 1;
    if cp.t != series.times[last] {
        return Err(Error::Artifact(format!(
            "checkpoint time {} differs from the last recorded time {}",
            cp.t, series.times[last]
        )));
    }
    let (state, _) = Integrator::from_config(&sim)?.derive(cp.t, cp.u, cp.gamma)?;
    series.snapshots[last].state = Some(state);
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        config,
        manifest,
        grid,
        series,
        modified,
    })
}

fn certify(run: &LoadedRun) -> Result<CertificateReport> {
    certificate_report(&run.series, &run.grid, &run.config.certificate_options())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

/// Structured text form of a certificate report.
pub fn format_report(run: &LoadedRun, report: &CertificateReport) -> String {
    let m = &run.manifest;
    let mut s = String::new();
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "scenario = {}", m.scenario);
    let _ = writeln!(s, "grid = {} x {}", m.nr, m.nz);
    let _ = writeln!(s, "scheme = {}, advection = {}", m.scheme, m.advection);
    let _ = writeln!(s, "dt = {}, T = {}", m.dt, m.horizon);
    if !run.modified.is_empty() {
        let _ = writeln!(s, "modified since run = {}", run.modified.join(", "));
    }
    let c = &report.constants;
    let _ = writeln!(s, "\n[constants]");
    for (name, v) in [
        ("D1", c.d1),
        ("D1_linear", c.d1_linear),
        ("D2", c.d2),
        ("D3", c.d3),
        ("D4", c.d4),
        ("D5", c.d5),
        ("D6", c.d6),
        ("D7", c.d7),
        ("D8", c.d8),
        ("G", c.g),
        ("G1", c.g1),
        ("G2", c.g2),
        ("kappa", c.kappa),
        ("c1", c.c1),
    ] {
        let _ = writeln!(s, "{name} = {v:.6e}");
    }
    let o = &report.options;
    let _ = writeln!(s, "\n[options]");
    let _ = writeln!(s, "eps0 = {}, delta = {}, c0 = {}, sigma = {}, d = {}", o.eps0, o.delta, o.c0, o.sigma, o.d);
    let _ = writeln!(s, "\n[entries]");
    let _ = writeln!(s, "name | mode | status | lhs | rhs | ratio | t | note");
    for e in &report.entries {
        let _ = writeln!(
            s,
            "{} | {} | {} | {:.6e} | {:.6e} | {} | {} | {}",
            e.name,
            e.mode,
            e.status,
            e.lhs,
            e.rhs,
            opt(e.ratio),
            opt(e.t),
            e.note
        );
    }
    let _ = writeln!(s, "\n[lambda]");
    for l in &report.lambdas {
        let side = match l.at_least_c0 {
            Some(true) => "at least c0",
            Some(false) => "below c0",
            None => "undefined",
        };
        let _ = writeln!(s, "s = {}: {} ({side})", l.s, opt(l.lambda));
    }
    if let Some(fp) = &report.fixed_point {
        let _ = writeln!(s, "\n[fixed_point]");
        let _ = writeln!(
            s,
            "M = {:.6e}, iterations = {}, converged = {}, diverged = {}, hypothesis_violated = {}, residual = {:.3e}",
            fp.m, fp.iterations, fp.converged, fp.diverged, fp.hypothesis_violated, fp.residual
        );
    }
    let failures = report.strict_failures();
    let _ = writeln!(s, "\n[verdict]");
    if failures.is_empty() {
        let _ = writeln!(s, "all strict entries pass");
    } else {
        let names: Vec<&str> = failures.iter().map(|e| e.name.as_str()).collect();
        let _ = writeln!(s, "strict failures: {}", names.join(", "));
    }
    s
}

pub fn cmd_check(dir: &Path) -> i32 {
    let run = match load_run(dir) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    for name in &run.modified {
        eprintln!("warning: {name} does not match the manifest hash");
    }
    let report = match certify(&run) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let text = format_report(&run, &report);
    if let Err(e) = atomic_write(&dir.join(CERTIFICATE_FILE), text.as_bytes()) {
        return fail(EXIT_INPUT, &e);
    }
    print!("{text}");
    if report.all_strict_pass() {
        EXIT_OK
    } else {
        EXIT_CERTIFICATE
    }
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Artifact(format!("csv buffer: {e}")))?;
    atomic_write(path, &bytes)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// `x_trajectory.csv`, `energy_budget.csv`, `lambda.csv` and `ledger.csv` for one run.
pub fn write_run_tables(run: &LoadedRun, report: &CertificateReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    write_table(
        &out.join("x_trajectory.csv"),
        &["t", "x"],
        report.x.iter().map(|(t, x)| vec![t.to_string(), x.to_string()]),
    )?;

    let s = &run.series;
    let nu = report.options.nu;
    let dissipation: Vec<f64> = s.snapshots.iter().map(|p| p.diagnostics.grad_v_sq + p.diagnostics.metric_sq).collect();
    let diss = cumulative_integral(&s.times, &dissipation);
    let f_int = cumulative_integral(&s.times, &s.column(|d| d.f_l2));
    let v0 = s.snapshots[0].diagnostics.v_sq;
    let rows = (0..s.len()).map(|k| {
        let v_sq = s.snapshots[k].diagnostics.v_sq;
        let forcing = 3.0 * f_int[k] * f_int[k];
        let values = [s.times[k], v_sq, diss[k], nu * diss[k], v_sq + nu * diss[k], forcing, 2.0 * v0, forcing + 2.0 * v0];
        values.iter().map(|v| v.to_string()).collect()
    });
    write_table(
        &out.join("energy_budget.csv"),
        &["t", "v_sq", "dissipation_cum", "viscous_term", "lhs", "forcing_term", "initial_term", "rhs"],
        rows,
    )?;

    write_table(
        &out.join("lambda.csv"),
        &["s", "lambda", "holder_bound", "at_least_c0"],
        report.lambdas.iter().map(|l| {
            let bound = (2.0 * std::f64::consts::PI * run.grid.half_height * run.grid.radius.powi(2)).powf(1.0 / l.s);
            vec![l.s.to_string(), cell(l.lambda), bound.to_string(), l.at_least_c0.map_or_else(String::new, |b| b.to_string())]
        }),
    )?;

    write_table(
        &out.join("ledger.csv"),
        &["name", "mode", "status", "lhs", "rhs", "ratio", "t"],
        report.entries.iter().map(|e| {
            vec![
                e.name.clone(),
                e.mode.to_string(),
                e.status.to_string(),
                e.lhs.to_string(),
                e.rhs.to_string(),
                cell(e.ratio),
                cell(e.t),
            ]
        }),
    )
}

/// One row per ledger entry, one ratio column per run ordered by resolution.
pub fn write_ratio_table(runs: &[(LoadedRun, CertificateReport)], path: &Path) -> Result<()> {
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by_key(|&k| (runs[k].0.grid.nr * runs[k].0.grid.nz, k));
    let mut header = vec!["name".to_string(), "mode".to_string()];
    header.extend(order.iter().map(|&k| format!("{}x{}", runs[k].0.grid.nr, runs[k].0.grid.nz)));
    let mut names: Vec<(String, String)> = Vec::new();
    for (_, rep) in runs {
        for e in &rep.entries {
            if !names.iter().any(|(n, _)| *n == e.name) {
                names.push((e.name.clone(), e.mode.to_string()));
            }
        }
    }
    let rows = names.into_iter().map(|(name, mode)| {
        let mut row = vec![name.clone(), mode];
        for &k in &order {
            let entry = runs[k].1.entry(&name).filter(|e| e.status != Status::Skipped);
            row.push(cell(entry.and_then(|e| e.ratio)));
        }
        row
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(path, &header, rows)
}

pub fn cmd_report(dirs: &[PathBuf], out: Option<&Path>) -> i32 {
    let mut runs = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let loaded = load_run(dir).and_then(|run| {
            let report = certify(&run)?;
            write_run_tables(&run, &report, &dir.join(REPORT_DIR))?;
            Ok((run, report))
        });
        match loaded {
            Ok(r) => {
                println!("tables written to {}", dir.join(REPORT_DIR).display());
                runs.push(r);
            }
            Err(e) => return fail(EXIT_INPUT, &e),
        }
    }
    if runs.len() > 1 {
        let target = out.map(Path::to_path_buf).unwrap_or_else(|| dirs[0].join(REPORT_DIR));
        let path = target.join("ratios_vs_resolution.csv");
        if let Err(e) = fs::create_dir_all(&target).map_err(Error::from).and_then(|_| write_ratio_table(&runs, &path)) {
            return fail(EXIT_INPUT, &e);
        }
        println!("ratio table written to {}", path.display());
    }
    EXIT_OK
}
