use super::matrix::RealMatrix;
use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: RealMatrix<T>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude entry is
/// positive (first such entry on ties).
pub fn sym_eig_desc<T: Real>(m: &RealMatrix<T>) -> Result<SymEigen<T>> {
    let (rows, cols) = m.shape();
    ensure!(rows == cols, "eigendecomposition needs a square matrix, got {rows}x{cols}");
    ensure!(m.is_finite(), "eigendecomposition input must be finite");
    let n = rows;
    let scale = m.max_abs();
    let sym_tol = T::lit(1e-9).max(T::epsilon() * T::lit(100.0)) * scale;
    for i in 0..n {
        for j in i + 1..n {
            ensure!(
                (m[(i, j)] - m[(j, i)]).abs() <= sym_tol,
                "matrix is not symmetric at ({i},{j})"
            );
        }
    }

    let mut a = m.clone();
    // symmetrize exactly so rotations stay consistent
    for i in 0..n {
        for j in i + 1..n {
            let v = (a[(i, j)] + a[(j, i)]) * T::lit(0.5);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = RealMatrix::identity(n);
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(4.0)) * m.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = RealMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) })
            .0;
        if col[pivot] < T::zero() {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        for (r, x) in col.into_iter().enumerate() {
            vectors[(r, dst)] = x;
        }
    }
    Ok(SymEigen { values, vectors })
}

fn off_diagonal_norm<T: Real>(a: &RealMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Applies the Jacobi rotation annihilating `a[p][q]`: `A ← JᵀAJ`, `V ← VJ`.
fn rotate<T: Real>(a: &mut RealMatrix<T>, v: &mut RealMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let n = a.rows();
    let two = T::lit(2.0);
    let tau = (a[(q, q)] - a[(p, p)]) / (two * apq);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
