//! Randomized trials shared by the property tests and the acceptance run.

use chartlab_core::chartmetrics::{
    kruskal_stress, mde, rajski_distance, trustworthiness_continuity, neighborhood_size,
};
use chartlab_core::downstream::{cc_pca, ChartPoints, CoordinateKind};
use chartlab_core::numkernel::RealMatrix;
use chartlab_core::preprocess::{extract_features, zero_pad, MaxDims};
use chartlab_core::{Matrix, Tensor};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: [usize; 4]) -> Tensor {
    let n = dims.iter().product();
    let data = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    Tensor::new(dims, data).unwrap()
}

/// Largest feature change under a random phase per AP and a random global
/// gain, for one random tensor of random (padded) shape.
pub fn feature_invariance_trial(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = MaxDims { a_max: 4, b_max: 4, u_max: 2, w_max: 48 };
    let dims = [rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(1..=2), rng.random_range(8..=48)];
    let c = rng.random_range(1..=8);
    let t = random_tensor(&mut rng, dims);
    let base = extract_features(&zero_pad(&t, &m).unwrap(), c).unwrap();
    let mut moved = t.clone();
    for a in 0..dims[0] {
        let rot = Complex64::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        for b in 0..dims[1] {
            for u in 0..dims[2] {
                moved.lane_mut(a, b, u).iter_mut().for_each(|z| *z *= rot);
            }
        }
    }
    moved.scale(Complex64::new(10f64.powf(rng.random_range(-3.0..3.0)), 0.0));
    let f = extract_features(&zero_pad(&moved, &m).unwrap(), c).unwrap();
    f.iter().zip(&base).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    // unequal column scales keep the eigenvalues well separated
    let mut m = RealMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] = rng.random_range(-1.0..1.0) * (d - j) as f64 + 0.3 * j as f64;
        }
    }
    m
}

/// Largest deviation of `cc_pca` from a covariance + nalgebra
/// eigendecomposition oracle, after matching each axis's sign.
pub fn pca_oracle_trial(seed: u64, n: usize, d: usize, k: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_matrix(&mut rng, n, d);
    let chart = cc_pca(&x, k).unwrap();

    let xm = nalgebra::DMatrix::from_row_slice(n, d, x.data());
    let mean = xm.row_mean();
    let mut centered = xm.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.transpose() * &centered / n as f64;
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut worst = 0.0f64;
    for (axis, &e) in order.iter().take(k).enumerate() {
        let proj = &centered * eig.eigenvectors.column(e);
        let ours: Vec<f64> = (0..n).map(|i| chart.points[(i, axis)]).collect();
        let sign = if ours.iter().zip(proj.iter()).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for (a, b) in ours.iter().zip(proj.iter()) {
            worst = worst.max((a - sign * b).abs());
        }
    }
    worst
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut m = RealMatrix::zeros(n, 2);
    for i in 0..n {
        m[(i, 0)] = rng.random_range(0.0..40.0);
        m[(i, 1)] = rng.random_range(0.0..60.0);
    }
    m
}

/// Rotation (or reflection) by `angle`, then scaling and translation.
pub fn similarity(m: &Matrix, angle: f64, reflect: bool, scale: f64, shift: [f64; 2]) -> Matrix {
    let (s, c) = angle.sin_cos();
    let mut out = m.clone();
    for i in 0..m.rows() {
        let (x, y) = (m[(i, 0)], if reflect { -m[(i, 1)] } else { m[(i, 1)] });
        out[(i, 0)] = scale * (c * x - s * y) + shift[0];
        out[(i, 1)] = scale * (s * x + c * y) + shift[1];
    }
    out
}

/// TW, CT, KS, RD of `chart` against `truth` at a 5% neighborhood.
pub fn quality(truth: &Matrix, chart: &Matrix) -> [f64; 4] {
    let c = ChartPoints::new(chart.clone(), CoordinateKind::Arbitrary).unwrap();
    let k = neighborhood_size(truth.rows(), 0.05);
    let (tw, ct) = trustworthiness_continuity(truth, &c.points, k).unwrap();
    [tw, ct, kruskal_stress(truth, &c.points).unwrap(), rajski_distance(truth, &c.points, 20).unwrap()]
}

/// Metric drift under a random isometry (all four) and under an extra
/// positive scaling (KS and RD), on a noisy chart of random points.
pub fn metric_invariance_trial(seed: u64, n: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_points(&mut rng, n);
    let mut chart = truth.clone();
    for v in chart.data_mut() {
        *v += rng.random_range(-3.0..3.0);
    }
    let base = quality(&truth, &chart);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let reflect = rng.random_bool(0.5);
    let shift = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
    let iso = quality(&truth, &similarity(&chart, angle, reflect, 1.0, shift));
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let scaled = quality(&truth, &similarity(&chart, angle, reflect, scale, shift));
    let iso_drift = base.iter().zip(&iso).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale_drift = (base[2] - scaled[2]).abs().max((base[3] - scaled[3]).abs());
    (iso_drift, scale_drift)
}

/// Identity chart at `n` points: `[MDE, 1 − TW, 1 − CT, KS, RD]`.
pub fn identity_scores(seed: u64, n: usize) -> [f64; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_points(&mut rng, n);
    let metric = ChartPoints::new(truth.clone(), CoordinateKind::Metric).unwrap();
    let q = quality(&truth, &truth);
    [mde(&metric, &truth).unwrap(), 1.0 - q[0], 1.0 - q[1], q[2], q[3]]
}
