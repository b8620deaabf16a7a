//! Population series on disk: one CSV per experiment (`t_us,p0,p1,p2`) and a
//! `dataset.json` manifest carrying per-experiment metadata.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{PopulationSeries, ProtocolConfig, ProtocolKind, MEASURED_LEVELS};
use crate::units::ghz_to_angular;

pub const SERIES_HEADER: [&str; 4] = ["t_us", "p0", "p1", "p2"];
pub const MANIFEST_FILE: &str = "dataset.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Experimental,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u32>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl DataMeta {
    pub fn synthetic(drive_ghz: Option<f64>, sigma: f64) -> Self {
        Self { drive_ghz, shots: None, provenance: Provenance::Synthetic, sigma: Some(sigma) }
    }
}

/// Measured (or synthesized) populations `P_n(t_j)` of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub kind: ProtocolKind,
    pub dt: f64,
    pub times: Vec<f64>,
    pub pops: [Vec<f64>; MEASURED_LEVELS],
    pub meta: DataMeta,
}

impl ExperimentData {
    pub fn from_series(series: PopulationSeries, dt: f64, meta: DataMeta) -> Result<Self> {
        let d = Self { kind: series.kind, dt, times: series.times, pops: series.pops, meta };
        d.validate()?;
        Ok(d)
    }

    pub fn n_steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidData(format!("{}: dt must be > 0, got {}", self.kind, self.dt)));
        }
        if self.times.len() < 2 {
            return Err(Error::InvalidData(format!("{}: need at least two dark times", self.kind)));
        }
        for (j, &t) in self.times.iter().enumerate() {
            let want = j as f64 * self.dt;
            if (t - want).abs() > 1e-9 * self.dt.max(want) {
                return Err(Error::InvalidData(format!(
                    "{}: time {t} at index {j} is off the uniform grid (expected {want})",
                    self.kind
                )));
            }
        }
        for (n, row) in self.pops.iter().enumerate() {
            if row.len() != self.times.len() {
                return Err(Error::InvalidData(format!("{}: row p{n} has {} entries for {} times", self.kind, row.len(), self.times.len())));
            }
            if row.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidData(format!("{}: non-finite population in row p{n}", self.kind)));
            }
        }
        if self.kind.is_ramsey() && self.meta.drive_ghz.is_none() {
            return Err(Error::InvalidData(format!("{}: Ramsey data without drive frequency", self.kind)));
        }
        Ok(())
    }

    /// Protocol whose simulation lands on this data's grid.
    pub fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig {
            kind: self.kind,
            omega_d: self.meta.drive_ghz.map(ghz_to_angular),
            dt: self.dt,
            n_steps: self.n_steps(),
            include_j0: true,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let series = PopulationSeries { kind: self.kind, times: self.times.clone(), pops: self.pops.clone() };
        write_series_csv(&series, path)
    }

    pub fn read_csv(path: &Path, kind: ProtocolKind, dt: f64, meta: DataMeta) -> Result<Self> {
        let series = read_series_csv(path, kind)?;
        let d = Self { kind, dt, times: series.times, pops: series.pops, meta };
        d.validate().map_err(|e| Error::parse(path, e))?;
        Ok(d)
    }
}

pub fn write_series_csv(series: &PopulationSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(SERIES_HEADER).map_err(|e| csv_error(path, e))?;
    for (j, t) in series.times.iter().enumerate() {
        let rec = [t.to_string(), series.pops[0][j].to_string(), series.pops[1][j].to_string(), series.pops[2][j].to_string()];
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_series_csv(path: &Path, kind: ProtocolKind) -> Result<PopulationSeries> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != SERIES_HEADER {
        return Err(Error::parse(path, format!("expected header {}, found {}", SERIES_HEADER.join(","), header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut times = Vec::new();
    let mut pops: [Vec<f64>; MEASURED_LEVELS] = Default::default();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(path, format!("row {}: {e}", line + 2)))?;
        if vals.len() != 4 {
            return Err(Error::parse(path, format!("row {}: expected 4 columns", line + 2)));
        }
        times.push(vals[0]);
        for n in 0..MEASURED_LEVELS {
            pops[n].push(vals[n + 1]);
        }
    }
    Ok(PopulationSeries { kind, times, pops })
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    kind: ProtocolKind,
    file: String,
    dt_us: f64,
    n_steps: usize,
    #[serde(flatten)]
    meta: DataMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    experiments: Vec<ManifestEntry>,
}

/// Writes one CSV per experiment plus the manifest into `dir`.
pub fn write_dataset(dir: &Path, data: &[ExperimentData]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut entries = Vec::new();
    for d in data {
        let file = format!("{}.csv", d.kind);
        let path = dir.join(&file);
        d.write_csv(&path)?;
        written.push(path);
        entries.push(ManifestEntry { kind: d.kind, file, dt_us: d.dt, n_steps: d.n_steps(), meta: d.meta.clone() });
    }
    let manifest = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&Manifest { experiments: entries }).expect("manifest serializes");
    fs::write(&manifest, text + "\n").map_err(|e| Error::io(&manifest, e))?;
    written.push(manifest);
    Ok(written)
}

pub fn read_dataset(dir: &Path) -> Result<Vec<ExperimentData>> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::parse(&manifest_path, e))?;
    let mut out = Vec::new();
    for entry in manifest.experiments {
        let path = dir.join(&entry.file);
        let d = ExperimentData::read_csv(&path, entry.kind, entry.dt_us, entry.meta)?;
        if d.n_steps() != entry.n_steps {
            return Err(Error::parse(&path, format!("manifest declares {} steps, file has {}", entry.n_steps, d.n_steps())));
        }
        out.push(d);
    }
    Ok(out)
}
