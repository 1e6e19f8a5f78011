use num_complex::Complex;

use super::tensor::ComplexTensor4;
use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Precomputed IDFT kernel `e^{+j2πwc/W} / W` for the first `n_taps`
/// delay taps of a length-`W` spectrum.
#[derive(Clone, Debug)]
pub struct TapTable<T> {
    n_subc: usize,
    n_taps: usize,
    // row c holds the kernel for tap c, contiguous over w
    kernel: Vec<Complex<T>>,
}

impl<T: Real> TapTable<T> {
    pub fn new(n_subc: usize, n_taps: usize) -> Result<Self> {
        ensure!(n_subc >= 1, "IDFT length must be positive");
        ensure!(
            (1..=n_subc).contains(&n_taps),
            "tap count {n_taps} outside 1..={n_subc}"
        );
        let inv_w = 1.0 / n_subc as f64;
        let mut kernel = Vec::with_capacity(n_subc * n_taps);
        for c in 0..n_taps {
            for w in 0..n_subc {
                // reduce the phase index first to keep the angle small
                let k = (w * c) % n_subc;
                let theta = std::f64::consts::TAU * k as f64 * inv_w;
                kernel.push(Complex::new(T::lit(theta.cos() * inv_w), T::lit(theta.sin() * inv_w)));
            }
        }
        Ok(Self { n_subc, n_taps, kernel })
    }

    pub fn n_subc(&self) -> usize {
        self.n_subc
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    /// Transforms one spectrum. `spectrum` may be shorter than `W`; the
    /// missing trailing subcarriers are treated as zero.
    pub fn transform_lane(&self, spectrum: &[Complex<T>], taps: &mut [Complex<T>]) {
        debug_assert!(spectrum.len() <= self.n_subc);
        debug_assert_eq!(taps.len(), self.n_taps);
        for (c, out) in taps.iter_mut().enumerate() {
            let row = &self.kernel[c * self.n_subc..c * self.n_subc + spectrum.len()];
            let mut re = T::zero();
            let mut im = T::zero();
            for (x, k) in spectrum.iter().zip(row) {
                re += x.re * k.re - x.im * k.im;
                im += x.re * k.im + x.im * k.re;
            }
            *out = Complex::new(re, im);
        }
    }
}

/// Inverse DFT along the subcarrier axis with `1/W` normalization:
/// `out[c] = (1/W) Σ_w in[w] e^{+j2πwc/W}`.
pub fn idft_subcarriers<T: Real>(t: &ComplexTensor4<T>) -> ComplexTensor4<T> {
    let w = t.dims()[3];
    idft_taps(t, w).expect("full-length IDFT is always in range")
}

/// Like [`idft_subcarriers`] but only evaluates the first `n_taps` taps.
pub fn idft_taps<T: Real>(t: &ComplexTensor4<T>, n_taps: usize) -> Result<ComplexTensor4<T>> {
    let [na, nb, nu, nw] = t.dims();
    let table = TapTable::new(nw, n_taps)?;
    let mut out = ComplexTensor4::zeros([na, nb, nu, n_taps]);
    for a in 0..na {
        for b in 0..nb {
            for u in 0..nu {
                table.transform_lane(t.lane(a, b, u), out.lane_mut(a, b, u));
            }
        }
    }
    Ok(out)
}
