//! Table writers. Numbers carry 12 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;
use crate::experiments::SweepRow;
use crate::ode::ObservableSeries;

pub const SWEEP_HEADER: [&str; 7] = ["ratio", "model", "g", "delta", "dm_final", "stop_time", "survival"];
pub const SERIES_HEADER: [&str; 4] = ["t", "norm", "rho00", "dm_t"];
pub const ERRORS_HEADER: [&str; 5] = ["ratio", "model", "g", "delta", "error"];
pub const DYNAMICS_HEADER: [&str; 7] =
    ["g", "delta", "dm_full", "dm_rate", "max_rho00_deviation", "max_dm_t_deviation", "final_dm_deviation"];

/// Twelve significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), source: e.into() }
}

fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<PathBuf, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<PathBuf, CliError> {
    write_table(
        path,
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            [
                fmt_num(r.ratio),
                r.model.name().to_string(),
                fmt_opt(r.g),
                fmt_opt(r.delta),
                fmt_opt(r.dm_final),
                fmt_opt(r.stop_time),
                fmt_opt(r.survival),
            ]
        }),
    )
}

pub fn write_errors(path: &Path, rows: &[&SweepRow]) -> Result<PathBuf, CliError> {
    write_table(
        path,
        &ERRORS_HEADER,
        rows.iter().map(|r| {
            [
                fmt_num(r.ratio),
                r.model.name().to_string(),
                fmt_opt(r.g),
                fmt_opt(r.delta),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_series(path: &Path, s: &ObservableSeries) -> Result<PathBuf, CliError> {
    write_table(
        path,
        &SERIES_HEADER,
        (0..s.len()).map(|i| [fmt_num(s.times[i]), fmt_num(s.norm[i]), fmt_num(s.rho00[i]), fmt_num(s.dm_t[i])]),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsRecord {
    pub g: f64,
    pub delta: f64,
    pub dm_full: f64,
    pub dm_rate: f64,
    pub max_rho00_deviation: f64,
    pub max_dm_t_deviation: f64,
    pub final_dm_deviation: f64,
}

pub fn write_dynamics(path: &Path, records: &[DynamicsRecord]) -> Result<PathBuf, CliError> {
    write_table(
        path,
        &DYNAMICS_HEADER,
        records.iter().map(|d| {
            [
                d.g,
                d.delta,
                d.dm_full,
                d.dm_rate,
                d.max_rho00_deviation,
                d.max_dm_t_deviation,
                d.final_dm_deviation,
            ]
            .map(fmt_num)
        }),
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e.into() })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}
