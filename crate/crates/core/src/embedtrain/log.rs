use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogPhase {
    Train,
    Test,
}

/// One training-log line: loss terms of one batch. Unused terms are zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub batch: usize,
    pub phase: LogPhase,
    pub triplet: f64,
    pub supervised: f64,
    pub reconstruction: f64,
    pub total: f64,
}

pub const LOG_CSV_HEADER: [&str; 7] =
    ["epoch", "batch", "phase", "triplet", "supervised", "reconstruction", "total"];

pub fn write_log_csv<W: Write>(w: W, rows: &[TrainLogRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    for r in rows {
        out.serialize(r).map_err(err)?;
    }
    out.flush()?;
    Ok(())
}

/// Mean of the `total` column over the rows of one epoch and phase.
pub(crate) fn epoch_mean(rows: &[TrainLogRow], epoch: usize, phase: LogPhase) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter(|r| r.epoch == epoch && r.phase == phase).map(|r| r.total).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
