use num_complex::Complex64;

use super::pad::{MaxDims, PaddedCsi};
use crate::error::{ensure, Error, Result};
use crate::numkernel::TapTable;
use crate::Tensor;

/// Delay-domain truncation and feature extraction for a fixed
/// `(MaxDims, c_trunc)`; the IDFT kernel is computed once.
#[derive(Clone, Debug)]
pub struct FeatureExtractor {
    max_dims: MaxDims,
    table: TapTable<f64>,
}

impl FeatureExtractor {
    pub fn new(max_dims: MaxDims, c_trunc: usize) -> Result<Self> {
        ensure!(
            (1..=max_dims.w_max).contains(&c_trunc),
            "tap count {c_trunc} outside 1..={}",
            max_dims.w_max
        );
        Ok(Self { max_dims, table: TapTable::new(max_dims.w_max, c_trunc)? })
    }

    pub fn c_trunc(&self) -> usize {
        self.table.n_taps()
    }

    pub fn max_dims(&self) -> MaxDims {
        self.max_dims
    }

    /// Feature length `D = a_max · b_max · u_max · c_trunc`.
    pub fn feature_dim(&self) -> usize {
        let m = self.max_dims;
        m.a_max * m.b_max * m.u_max * self.c_trunc()
    }

    /// Raw vector length `2D`.
    pub fn raw_dim(&self) -> usize {
        2 * self.feature_dim()
    }

    /// IDFT over all `w_max` subcarriers, keeping the first `c_trunc` taps.
    pub fn truncate(&self, p: &PaddedCsi) -> Result<Tensor> {
        ensure!(
            p.max_dims() == self.max_dims,
            "padded dims {:?} differ from extractor dims {:?}",
            p.max_dims().dims(),
            self.max_dims.dims()
        );
        let m = self.max_dims;
        let mut out = Tensor::zeros([m.a_max, m.b_max, m.u_max, self.c_trunc()]);
        // trailing padded subcarriers are zero and contribute nothing
        let w_real = p.subc_mask.iter().filter(|&&x| x).count();
        for (a, b, u) in p.live_lanes() {
            self.table.transform_lane(&p.tensor.lane(a, b, u)[..w_real], out.lane_mut(a, b, u));
        }
        Ok(out)
    }

    /// `|vec(T)| / ‖vec(T)‖` of the truncated tensor `T`.
    pub fn features(&self, p: &PaddedCsi) -> Result<Vec<f64>> {
        let t = self.truncate(p)?;
        let mut f: Vec<f64> = t.data().iter().map(|z| z.norm()).collect();
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Data("cannot normalize features of an all-zero tensor".into()));
        }
        f.iter_mut().for_each(|x| *x /= norm);
        Ok(f)
    }

    /// Real parts then imaginary parts of `vec(T)`.
    pub fn raw(&self, p: &PaddedCsi) -> Result<Vec<f64>> {
        let t = self.truncate(p)?;
        let data: &[Complex64] = t.data();
        Ok(data.iter().map(|z| z.re).chain(data.iter().map(|z| z.im)).collect())
    }
}

pub fn delay_truncate(p: &PaddedCsi, c_trunc: usize) -> Result<Tensor> {
    FeatureExtractor::new(p.max_dims(), c_trunc)?.truncate(p)
}

pub fn extract_features(p: &PaddedCsi, c_trunc: usize) -> Result<Vec<f64>> {
    FeatureExtractor::new(p.max_dims(), c_trunc)?.features(p)
}

pub fn extract_raw(p: &PaddedCsi, c_trunc: usize) -> Result<Vec<f64>> {
    FeatureExtractor::new(p.max_dims(), c_trunc)?.raw(p)
}
