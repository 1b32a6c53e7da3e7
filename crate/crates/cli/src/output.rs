//! Deterministic writers for CSV trajectories and JSON reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// One row of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: i64,
    pub coords: Vec<f64>,
    pub f: f64,
    pub phi: f64,
    pub defect: f64,
}

/// Shortest round-trip text of `v`, switching to exponent form for very
/// large or small magnitudes.
pub fn cell(v: f64) -> String {
    format!("{v:?}")
}

pub fn trajectory_header(dim: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(dim + 4);
    h.push("t".to_string());
    h.extend((0..dim).map(|i| format!("x_{i}")));
    h.extend(["f", "phi", "defect"].map(String::from));
    h
}

/// Writes rows sorted by `t` under the fixed header.
pub fn write_trajectory(path: &Path, dim: usize, rows: &[TrajectoryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trajectory_header(dim))?;
    for r in rows {
        let mut rec = Vec::with_capacity(dim + 4);
        rec.push(r.t.to_string());
        rec.extend(r.coords.iter().map(|v| cell(*v)));
        rec.extend([r.f, r.phi, r.defect].map(cell));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// `trajectory.csv` → `trajectory_3.csv` when several files share a name.
pub fn indexed_name(name: &str, i: usize, count: usize) -> String {
    if count <= 1 {
        return name.to_string();
    }
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}_{i}.{ext}"),
        None => format!("{name}_{i}"),
    }
}
