//! Run directory artifacts: time-series CSV, checkpoint, manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::norms::{Diagnostics, TimeSeries};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CERTIFICATE_FILE: &str = "certificate.txt";

pub const CHECKPOINT_MAGIC: &str = "AXISYM-CHECKPOINT";
pub const CHECKPOINT_VERSION: u32 = 1;
const CHECKPOINT_FIELDS: [&str; 3] = ["u", "gamma", "psi1"];

/// Writes next to the target and renames, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Artifact(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_artifact(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    fs::read(&path).map_err(|e| Error::Artifact(format!("cannot read {}: {e}", path.display())))
}

/// `t` followed by every diagnostic column in `Diagnostics::column_names` order.
pub fn timeseries_csv(series: &TimeSeries) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let names = series
        .snapshots
        .first()
        .map(|s| s.diagnostics.column_names())
        .unwrap_or_else(|| Diagnostics::default().column_names());
    w.write_record(std::iter::once("t".to_string()).chain(names))?;
    for (t, snap) in series.times.iter().zip(&series.snapshots) {
        w.write_record(std::iter::once(*t).chain(snap.diagnostics.values()).map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Artifact(format!("csv buffer: {e}")))
}

/// Inverse of [`timeseries_csv`]; snapshots come back without states.
pub fn parse_timeseries_csv(bytes: &[u8]) -> Result<TimeSeries> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(Error::Artifact("time series must start with a `t` column".into()));
    }
    let mut series = TimeSeries::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Artifact(format!("row {}: {e}", line + 1)))?;
        let pairs: Vec<(String, f64)> = header[1..].iter().cloned().zip(values[1..].iter().copied()).collect();
        series.push(values[0], None, Diagnostics::from_named(&pairs)?)?;
    }
    if series.is_empty() {
        return Err(Error::Artifact("time series has no rows".into()));
    }
    Ok(series)
}

/// Raw fields of one stored time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub nr: usize,
    pub nz: usize,
    pub radius: f64,
    pub half_height: f64,
    pub t: f64,
    pub u: Vec<f64>,
    pub gamma: Vec<f64>,
    pub psi1: Vec<f64>,
}

impl Checkpoint {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.radius, self.half_height, self.nr, self.nz)
    }

    /// Text header terminated by `end`, then the fields as little-endian doubles in header order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "{CHECKPOINT_MAGIC}\nversion {CHECKPOINT_VERSION}\nnr {}\nnz {}\nradius {}\nhalf_height {}\nt {}\nfields {}\nend\n",
            self.nr,
            self.nz,
            self.radius,
            self.half_height,
            self.t,
            CHECKPOINT_FIELDS.join(" ")
        );
        let mut out = header.into_bytes();
        for field in [&self.u, &self.gamma, &self.psi1] {
            for v in field {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Artifact(format!("checkpoint: {m}"));
        let marker = b"\nend\n";
        let end = bytes
            .windows(marker.len())
            .position(|w| w == marker)
            .ok_or_else(|| bad("header is not terminated"))?;
        let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not text"))?;
        let mut lines = header.lines();
        if lines.next() != Some(CHECKPOINT_MAGIC) {
            return Err(bad("missing magic string"));
        }
        let mut get = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing {key}")))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected {key}, found `{line}`")))
        };
        let num = |s: String, key: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad {key}")));
        let version: u32 = get("version")?.parse().map_err(|_| bad("bad version"))?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let nr: usize = get("nr")?.parse().map_err(|_| bad("bad nr"))?;
        let nz: usize = get("nz")?.parse().map_err(|_| bad("bad nz"))?;
        let radius = num(get("radius")?, "radius")?;
        let half_height = num(get("half_height")?, "half_height")?;
        let t = num(get("t")?, "t")?;
        if get("fields")? != CHECKPOINT_FIELDS.join(" ") {
            return Err(bad("unexpected field list"));
        }
        let data = &bytes[end + marker.len()..];
        let n = nr * nz;
        if data.len() != 3 * n * 8 {
            return Err(bad(&format!("expected {} data bytes, found {}", 3 * n * 8, data.len())));
        }
        let doubles: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self {
            nr,
            nz,
            radius,
            half_height,
            t,
            u: doubles[..n].to_vec(),
            gamma: doubles[n..2 * n].to_vec(),
            psi1: doubles[2 * n..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub scenario: String,
    pub nr: usize,
    pub nz: usize,
    pub radius: f64,
    pub half_height: f64,
    pub scheme: String,
    pub advection: String,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// `completed` or `failed`.
    pub status: String,
    pub snapshots: usize,
    pub failing_step: Option<usize>,
    pub failing_time: Option<f64>,
    pub error: Option<String>,
    pub timeseries_sha256: String,
    pub checkpoint_sha256: Option<String>,
    pub checkpoint_time: Option<f64>,
}

impl Manifest {
    pub const COMPLETED: &'static str = "completed";
    pub const FAILED: &'static str = "failed";

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Artifact(format!("manifest: {e}")))
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Artifact(format!("manifest: {}", e.message())))
    }
}
