use serde::{Deserialize, Serialize};

use super::distance_metrics::upper_distances;
use super::{
    kruskal_stress_from_distances, mde, neighborhood_size, p95, rajski_from_distances,
    trustworthiness_continuity,
};
use crate::downstream::{ChartPoints, CoordinateKind};
use crate::error::{ensure, Error, Result};
use crate::numkernel::RealMatrix;
use crate::rng::{stream, tag};
use crate::scalar::Real;

/// Settings for [`evaluate_all`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Cap on the sample count fed to the pairwise metrics.
    pub n_max: usize,
    pub n_bins: usize,
    /// Neighborhood size as a fraction of the (subsampled) sample count.
    pub neighborhood_fraction: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { n_max: 2000, n_bins: 20, neighborhood_fraction: 0.05, seed: 0 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 || self.n_bins == 0 {
            return Err(Error::Config("eval.n_max must be >= 2 and eval.n_bins >= 1".into()));
        }
        if !(self.neighborhood_fraction > 0.0 && self.neighborhood_fraction < 0.5) {
            return Err(Error::Config("eval.neighborhood_fraction must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

/// All chart quality numbers for one chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mde_m: Option<f64>,
    pub p95_m: Option<f64>,
    pub tw: f64,
    pub ct: f64,
    pub ks: f64,
    pub rd: f64,
    pub n_samples: usize,
    pub n_subsampled: usize,
    pub neighborhood_k: usize,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "mde_m,p95_m,tw,ct,ks,rd,n_samples,n_subsampled,neighborhood_k";

    /// One CSV row in [`Self::CSV_HEADER`] order; absent distances are empty cells.
    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            opt(self.mde_m),
            opt(self.p95_m),
            self.tw,
            self.ct,
            self.ks,
            self.rd,
            self.n_samples,
            self.n_subsampled,
            self.neighborhood_k
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Centers the chart and divides by its largest absolute coordinate.
pub fn normalize_chart<T: Real>(chart: &ChartPoints<T>) -> Result<ChartPoints<T>> {
    let p = &chart.points;
    ensure!(p.rows() >= 2, "normalizing needs at least two points");
    let n = T::lit(p.rows() as f64);
    let means: Vec<T> = (0..p.cols()).map(|j| p.column(j).into_iter().sum::<T>() / n).collect();
    let mut out = p.clone();
    for i in 0..out.rows() {
        for (v, &m) in out.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    let scale = out.max_abs();
    if scale <= T::zero() || !scale.is_finite() {
        return Err(Error::Data("cannot normalize a chart whose points all coincide".into()));
    }
    let out = out.map(|v| v / scale);
    Ok(ChartPoints { points: out, kind: chart.kind })
}

/// Evaluates every metric; distance errors only for metric charts.
pub fn evaluate_all<T: Real>(
    chart: &ChartPoints<T>,
    truth: &RealMatrix<T>,
    cfg: &EvalConfig,
) -> Result<MetricReport> {
    cfg.validate()?;
    ensure!(
        chart.points.rows() == truth.rows(),
        "chart has {} points, truth {}",
        chart.points.rows(),
        truth.rows()
    );
    let n = truth.rows();
    let (mde_m, p95_m) = match chart.kind {
        CoordinateKind::Metric => (
            Some(mde(chart, truth)?.to_f64_lossy()),
            Some(p95(chart, truth)?.to_f64_lossy()),
        ),
        CoordinateKind::Arbitrary => (None, None),
    };
    let (t, c) = if n > cfg.n_max {
        let mut rng = stream(&[cfg.seed, tag::SUBSAMPLE, n as u64]);
        let mut idx = rand::seq::index::sample(&mut rng, n, cfg.n_max).into_vec();
        idx.sort_unstable();
        (truth.select_rows(&idx), chart.points.select_rows(&idx))
    } else {
        (truth.clone(), chart.points.clone())
    };
    let m = t.rows();
    let k = neighborhood_size(m, cfg.neighborhood_fraction);
    let (tw, ct) = trustworthiness_continuity(&t, &c, k)?;
    let (delta, d) = (upper_distances(&t), upper_distances(&c));
    let ks = kruskal_stress_from_distances(&delta, &d)?;
    let rd = rajski_from_distances(&delta, &d, cfg.n_bins)?;
    Ok(MetricReport {
        mde_m,
        p95_m,
        tw: tw.to_f64_lossy(),
        ct: ct.to_f64_lossy(),
        ks: ks.to_f64_lossy(),
        rd: rd.to_f64_lossy(),
        n_samples: n,
        n_subsampled: m,
        neighborhood_k: k,
    })
}
