use super::matrix::RealMatrix;
use crate::scalar::Real;

#[inline]
pub fn euclidean<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}

/// Symmetric matrix of Euclidean distances between the rows of `points`.
pub fn pairwise_distances<T: Real>(points: &RealMatrix<T>) -> RealMatrix<T> {
    let n = points.rows();
    let mut d = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = euclidean(points.row(i), points.row(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}
