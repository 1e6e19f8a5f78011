use crate::downstream::{ChartPoints, CoordinateKind};
use crate::error::{ensure, Error, Result};
use crate::numkernel::{euclidean, RealMatrix};
use crate::scalar::Real;

fn errors<T: Real>(chart: &ChartPoints<T>, truth: &RealMatrix<T>) -> Result<Vec<T>> {
    if chart.kind == CoordinateKind::Arbitrary {
        return Err(Error::Contract("distance errors need a metric-coordinate chart".into()));
    }
    ensure!(
        chart.points.shape() == truth.shape(),
        "chart shape {:?} differs from truth {:?}",
        chart.points.shape(),
        truth.shape()
    );
    ensure!(truth.rows() > 0, "no samples");
    Ok(chart.points.iter_rows().zip(truth.iter_rows()).map(|(a, b)| euclidean(a, b)).collect())
}

/// Mean Euclidean position error.
pub fn mde<T: Real>(chart: &ChartPoints<T>, truth: &RealMatrix<T>) -> Result<T> {
    let e = errors(chart, truth)?;
    Ok(e.iter().copied().sum::<T>() / T::lit(e.len() as f64))
}

/// 95th percentile of the Euclidean position error.
pub fn p95<T: Real>(chart: &ChartPoints<T>, truth: &RealMatrix<T>) -> Result<T> {
    let mut e = errors(chart, truth)?;
    Ok(percentile_linear(&mut e, 95.0))
}

/// Percentile with linear interpolation between order statistics
/// (position `p/100 · (n−1)` in the sorted sample). Sorts `xs` in place.
pub fn percentile_linear<T: Real>(xs: &mut [T], p: f64) -> T {
    assert!(!xs.is_empty(), "percentile of an empty sample");
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
    let pos = p / 100.0 * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    xs[lo] + (xs[hi] - xs[lo]) * frac
}
