use crate::error::{ensure, Result};
use crate::numkernel::{euclidean, RealMatrix};
use crate::scalar::Real;

/// Distances over all unordered pairs `i < j`, row-major.
pub(crate) fn upper_distances<T: Real>(points: &RealMatrix<T>) -> Vec<T> {
    let n = points.rows();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(euclidean(points.row(i), points.row(j)));
        }
    }
    out
}

fn paired<T: Real>(truth: &RealMatrix<T>, chart: &RealMatrix<T>) -> Result<(Vec<T>, Vec<T>)> {
    ensure!(truth.rows() == chart.rows(), "truth and chart sample counts differ");
    ensure!(truth.rows() >= 2, "need at least two samples");
    Ok((upper_distances(truth), upper_distances(chart)))
}

/// Kruskal stress under the optimal global scale of the chart.
pub fn kruskal_stress<T: Real>(truth: &RealMatrix<T>, chart: &RealMatrix<T>) -> Result<T> {
    let (delta, d) = paired(truth, chart)?;
    kruskal_stress_from_distances(&delta, &d)
}

/// Same as [`kruskal_stress`] on precomputed pair distances
/// (`delta` from the truth, `d` from the chart).
pub fn kruskal_stress_from_distances<T: Real>(delta: &[T], d: &[T]) -> Result<T> {
    ensure!(delta.len() == d.len() && !delta.is_empty(), "distance sets must match and be nonempty");
    let (mut sdd, mut sd2, mut sdel2) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in delta.iter().zip(d) {
        let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
        sdd += a * b;
        sd2 += b * b;
        sdel2 += a * a;
    }
    if sdel2 == 0.0 {
        return Ok(T::zero());
    }
    if sd2 == 0.0 {
        // collapsed chart: the best scaled fit is all zeros
        return Ok(T::one());
    }
    let beta = sdd / sd2;
    let resid: f64 = delta
        .iter()
        .zip(d)
        .map(|(&a, &b)| {
            let r = a.to_f64_lossy() - beta * b.to_f64_lossy();
            r * r
        })
        .sum();
    Ok(T::lit((resid / sdel2).sqrt().min(1.0)))
}

/// Rajski distance between quantized truth and chart pair distances.
pub fn rajski_distance<T: Real>(truth: &RealMatrix<T>, chart: &RealMatrix<T>, n_bins: usize) -> Result<T> {
    let (delta, d) = paired(truth, chart)?;
    rajski_from_distances(&delta, &d, n_bins)
}

fn quantize<T: Real>(xs: &[T], n_bins: usize) -> Vec<usize> {
    let max = xs.iter().fold(0.0f64, |m, &x| m.max(x.to_f64_lossy()));
    if max <= 0.0 {
        return vec![0; xs.len()];
    }
    xs.iter()
        .map(|&x| (((x.to_f64_lossy() / max) * n_bins as f64).floor() as usize).min(n_bins - 1))
        .collect()
}

fn entropy(counts: &[u64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

pub fn rajski_from_distances<T: Real>(delta: &[T], d: &[T], n_bins: usize) -> Result<T> {
    ensure!(delta.len() == d.len() && !delta.is_empty(), "distance sets must match and be nonempty");
    ensure!(n_bins >= 1, "need at least one bin");
    let (bx, by) = (quantize(delta, n_bins), quantize(d, n_bins));
    let mut joint = vec![0u64; n_bins * n_bins];
    let mut hx = vec![0u64; n_bins];
    let mut hy = vec![0u64; n_bins];
    for (&x, &y) in bx.iter().zip(&by) {
        joint[x * n_bins + y] += 1;
        hx[x] += 1;
        hy[y] += 1;
    }
    let total = delta.len() as f64;
    let h_xy = entropy(&joint, total);
    if h_xy <= 0.0 {
        return Ok(T::zero());
    }
    let mi = entropy(&hx, total) + entropy(&hy, total) - h_xy;
    Ok(T::lit((1.0 - mi / h_xy).clamp(0.0, 1.0)))
}
