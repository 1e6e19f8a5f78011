use crate::error::{ensure, Result};
use crate::numkernel::{pairwise_distances, RealMatrix};
use crate::scalar::Real;

/// `K = ⌊fraction · N⌋`.
pub fn neighborhood_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Neighbor order per point: other points sorted by distance, ties broken
/// by index. Returns `(order, rank)` with `rank[i][j]` 1-based.
fn neighbor_ranks<T: Real>(dist: &RealMatrix<T>) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let n = dist.rows();
    let mut orders = Vec::with_capacity(n);
    let mut ranks = Vec::with_capacity(n);
    for i in 0..n {
        let row = dist.row(i);
        let mut order: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
        order.sort_by(|&a, &b| {
            row[a as usize]
                .partial_cmp(&row[b as usize])
                .expect("finite distances")
                .then(a.cmp(&b))
        });
        let mut rank = vec![0u32; n];
        for (r, &j) in order.iter().enumerate() {
            rank[j as usize] = r as u32 + 1;
        }
        orders.push(order);
        ranks.push(rank);
    }
    (orders, ranks)
}

/// `1 − 2/(N K (2N − 3K − 1)) Σ_i Σ_{j ∈ U_K(i)} (r(i, j) − K)` where
/// `U_K(i)` holds the `K` nearest neighbors of `i` in `from` that are not
/// among its `K` nearest in `reference`, and `r` ranks by `reference`.
fn rank_penalty(
    from_order: &[Vec<u32>],
    ref_rank: &[Vec<u32>],
    k: usize,
) -> f64 {
    let n = from_order.len();
    let mut sum = 0.0f64;
    for i in 0..n {
        for &j in &from_order[i][..k] {
            let r = ref_rank[i][j as usize] as usize;
            if r > k {
                sum += (r - k) as f64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * sum
}

fn check_k(n: usize, k: usize) -> Result<()> {
    ensure!(k >= 1 && k < n, "neighborhood size K = {k} needs 1 <= K < N = {n}");
    ensure!(2 * n > 3 * k + 1, "neighborhood size K = {k} too large for N = {n}");
    Ok(())
}

/// Trustworthiness and continuity in one pass over both rankings.
pub fn trustworthiness_continuity<T: Real>(
    truth: &RealMatrix<T>,
    chart: &RealMatrix<T>,
    k: usize,
) -> Result<(T, T)> {
    ensure!(truth.rows() == chart.rows(), "truth and chart sample counts differ");
    check_k(truth.rows(), k)?;
    let (t_order, t_rank) = neighbor_ranks(&pairwise_distances(truth));
    let (c_order, c_rank) = neighbor_ranks(&pairwise_distances(chart));
    let tw = rank_penalty(&c_order, &t_rank, k);
    let ct = rank_penalty(&t_order, &c_rank, k);
    Ok((T::lit(tw), T::lit(ct)))
}

/// Penalizes chart neighbors that are not neighbors in the truth.
pub fn trustworthiness<T: Real>(truth: &RealMatrix<T>, chart: &RealMatrix<T>, k: usize) -> Result<T> {
    Ok(trustworthiness_continuity(truth, chart, k)?.0)
}

/// Penalizes truth neighbors that are lost in the chart.
pub fn continuity<T: Real>(truth: &RealMatrix<T>, chart: &RealMatrix<T>, k: usize) -> Result<T> {
    Ok(trustworthiness_continuity(truth, chart, k)?.1)
}
