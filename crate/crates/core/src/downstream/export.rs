use std::io::Write;

use super::ChartPoints;
use crate::error::{ensure, Error, Result};
use crate::Matrix;

pub const CHART_CSV_HEADER: [&str; 7] =
    ["sample_index", "timestamp", "x_true", "y_true", "x_hat", "y_hat", "coordinate_kind"];

/// Writes one row per chart point. Truth cells stay empty when `truth` is
/// `None`.
pub fn write_chart_csv<W: Write>(
    w: W,
    chart: &ChartPoints,
    sample_index: &[usize],
    timestamps: &[f64],
    truth: Option<&Matrix>,
) -> Result<()> {
    let n = chart.len();
    ensure!(chart.dim() == 2, "chart export expects 2-D points");
    ensure!(sample_index.len() == n && timestamps.len() == n, "index columns must match the chart");
    if let Some(t) = truth {
        ensure!(t.rows() == n && t.cols() == 2, "truth must be an N×2 matrix");
    }
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    out.write_record(CHART_CSV_HEADER).map_err(csv_err)?;
    for i in 0..n {
        let (xt, yt) = match truth {
            Some(t) => (t[(i, 0)].to_string(), t[(i, 1)].to_string()),
            None => (String::new(), String::new()),
        };
        out.write_record([
            sample_index[i].to_string(),
            timestamps[i].to_string(),
            xt,
            yt,
            chart.points[(i, 0)].to_string(),
            chart.points[(i, 1)].to_string(),
            chart.kind.as_str().to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
