//! CSV layouts for episode logs and per-cycle diagnostics.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

/// One control period. Pose and wheel angle are sampled at `t`; the decision
/// fields describe the command issued at `t` and are empty on the terminal
/// record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub delta: f64,
    pub delta_cmd: f64,
    /// Selected beam index.
    pub m: Option<usize>,
    pub desired_heading: Option<f64>,
    pub min_range: f64,
    /// Distance to the nearest obstacle minus the vehicle radius.
    pub clearance: f64,
    pub speed: f64,
    pub objective: Option<f64>,
}

/// One beam of one cycle's histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub cycle: usize,
    pub i: usize,
    pub d_i: f64,
    #[serde(rename = "D_i")]
    pub reach: f64,
    #[serde(rename = "B_i")]
    pub symbol: u8,
    #[serde(rename = "H_i")]
    pub threshold: u8,
    #[serde(rename = "S_i")]
    pub denominator: f64,
    #[serde(rename = "C_i")]
    pub cost: f64,
}

/// Solver statistics of one MPC cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcDiagnostic {
    pub cycle: usize,
    pub t: f64,
    pub objective: f64,
    pub iterations: usize,
    pub active_constraints: usize,
    pub delta_u1: f64,
    pub kkt_residual: f64,
    pub exact: bool,
}

pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(reader: R) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

pub fn write_trajectory_csv<W: Write>(writer: W, records: &[EpisodeRecord]) -> Result<(), csv::Error> {
    write_csv(writer, records)
}

pub fn read_trajectory_csv<R: Read>(reader: R) -> Result<Vec<EpisodeRecord>, csv::Error> {
    read_csv(reader)
}
