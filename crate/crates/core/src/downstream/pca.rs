use super::{ChartPoints, CoordinateKind};
use crate::error::{ensure, Result};
use crate::numkernel::{sym_eig_desc, RealMatrix};
use crate::scalar::Real;

/// Principal axes fitted on one set of embeddings, reusable on another.
#[derive(Clone, Debug)]
pub struct PcaProjection<T = f64> {
    pub mean: Vec<T>,
    /// Row `k` is the `k`-th principal direction.
    pub components: RealMatrix<T>,
    /// Leading eigenvalues of the centered scatter matrix.
    pub eigenvalues: Vec<T>,
}

impl<T: Real> PcaProjection<T> {
    /// Centers every coordinate and diagonalizes the `D×D` scatter matrix.
    pub fn fit(embeddings: &RealMatrix<T>, d: usize) -> Result<Self> {
        let (n, dim) = embeddings.shape();
        ensure!(n > d, "PCA to {d} dimensions needs more than {d} samples, got {n}");
        ensure!(d >= 1 && d <= dim, "PCA target dimension {d} outside 1..={dim}");
        let inv_n = T::one() / T::lit(n as f64);
        let mut mean = vec![T::zero(); dim];
        for row in embeddings.iter_rows() {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x * inv_n;
            }
        }
        let mut scatter = RealMatrix::zeros(dim, dim);
        let mut centered = vec![T::zero(); dim];
        for row in embeddings.iter_rows() {
            for ((c, &x), &m) in centered.iter_mut().zip(row).zip(&mean) {
                *c = x - m;
            }
            for i in 0..dim {
                let ci = centered[i];
                if ci == T::zero() {
                    continue;
                }
                let out = scatter.row_mut(i);
                for j in i..dim {
                    out[j] += ci * centered[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                scatter[(i, j)] = scatter[(j, i)];
            }
        }
        let eig = sym_eig_desc(&scatter)?;
        let mut components = RealMatrix::zeros(d, dim);
        for k in 0..d {
            for j in 0..dim {
                components[(k, j)] = eig.vectors[(j, k)];
            }
        }
        Ok(Self { mean, components, eigenvalues: eig.values[..d].to_vec() })
    }

    pub fn project(&self, embeddings: &RealMatrix<T>) -> Result<RealMatrix<T>> {
        ensure!(
            embeddings.cols() == self.mean.len(),
            "embedding width {} does not match the fitted width {}",
            embeddings.cols(),
            self.mean.len()
        );
        let d = self.components.rows();
        let mut out = RealMatrix::zeros(embeddings.rows(), d);
        let mut centered = vec![T::zero(); self.mean.len()];
        for (i, row) in embeddings.iter_rows().enumerate() {
            for ((c, &x), &m) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = x - m;
            }
            for k in 0..d {
                out[(i, k)] = crate::numkernel::matrix::dot(self.components.row(k), &centered);
            }
        }
        Ok(out)
    }
}

/// Projects centered embeddings onto their top `d` principal axes.
pub fn cc_pca<T: Real>(embeddings: &RealMatrix<T>, d: usize) -> Result<ChartPoints<T>> {
    let p = PcaProjection::fit(embeddings, d)?;
    ChartPoints::new(p.project(embeddings)?, CoordinateKind::Arbitrary)
}
