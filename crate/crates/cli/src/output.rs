//! Deterministic output files: CSV data streams and one JSON summary
//! per run. Numbers are written with 17 significant digits so that
//! repeated runs are byte-identical and values round-trip exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use defosc::{Snapshots, Trajectory};

use crate::config::{RunMode, ScenarioConfig};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const STEADY_FILE: &str = "steady.csv";
pub const BOLTZMANN_FILE: &str = "boltzmann.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// One JSON document describing the whole run.
#[derive(Serialize)]
pub struct Summary<'a> {
    pub config: &'a ScenarioConfig,
    pub mode: RunMode,
    pub outputs: Vec<String>,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
    pub timings: Timings,
}

#[derive(Serialize)]
pub struct Timings {
    pub total_seconds: f64,
}

fn csv(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sampled observables: `t,mean_N,energy,trace,trace_leak,min_eig`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> io::Result<String> {
    let mut out = BufWriter::new(File::create(dir.join(TRAJECTORY_FILE))?);
    writeln!(out, "t,mean_N,energy,trace,trace_leak,min_eig")?;
    for i in 0..traj.len() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv(traj.times[i]),
            csv(traj.mean_n[i]),
            csv(traj.energy[i]),
            csv(traj.trace[i]),
            csv(traj.trace_leak[i]),
            csv(traj.min_eig[i]),
        )?;
    }
    out.flush()?;
    Ok(TRAJECTORY_FILE.to_string())
}

/// Population column `n,P`.
pub fn write_populations(dir: &Path, file_name: &str, values: &[f64]) -> io::Result<String> {
    let mut out = BufWriter::new(File::create(dir.join(file_name))?);
    writeln!(out, "n,P")?;
    for (n, v) in values.iter().enumerate() {
        writeln!(out, "{n},{}", csv(*v))?;
    }
    out.flush()?;
    Ok(file_name.to_string())
}

/// Energy levels `n,E`.
pub fn write_spectrum(dir: &Path, levels: &[f64]) -> io::Result<String> {
    let mut out = BufWriter::new(File::create(dir.join(SPECTRUM_FILE))?);
    writeln!(out, "n,E")?;
    for (n, e) in levels.iter().enumerate() {
        writeln!(out, "{n},{}", csv(*e))?;
    }
    out.flush()?;
    Ok(SPECTRUM_FILE.to_string())
}

#[derive(Serialize)]
struct SnapshotRecord {
    t: f64,
    /// Row-major [re, im] pairs (populations carry im = 0).
    data: Vec<[f64; 2]>,
}

/// Sampled states as JSON, one record per sampling time.
pub fn write_snapshots(dir: &Path, times: &[f64], snaps: &Snapshots) -> io::Result<String> {
    let records: Vec<SnapshotRecord> = match snaps {
        Snapshots::Density(mats) => times
            .iter()
            .zip(mats)
            .map(|(&t, m)| SnapshotRecord { t, data: m.iter().map(|z| [z.re, z.im]).collect() })
            .collect(),
        Snapshots::Populations(ps) => times
            .iter()
            .zip(ps)
            .map(|(&t, p)| SnapshotRecord { t, data: p.iter().map(|&v| [v, 0.0]).collect() })
            .collect(),
    };
    let mut out = BufWriter::new(File::create(dir.join(SNAPSHOTS_FILE))?);
    serde_json::to_writer(&mut out, &records).map_err(io::Error::other)?;
    writeln!(out)?;
    out.flush()?;
    Ok(SNAPSHOTS_FILE.to_string())
}

/// Writes the single summary document every run ends with.
pub fn write_summary(dir: &Path, summary: &Summary<'_>) -> io::Result<String> {
    let mut out = BufWriter::new(File::create(dir.join(SUMMARY_FILE))?);
    serde_json::to_writer_pretty(&mut out, summary).map_err(io::Error::other)?;
    writeln!(out)?;
    out.flush()?;
    Ok(SUMMARY_FILE.to_string())
}
