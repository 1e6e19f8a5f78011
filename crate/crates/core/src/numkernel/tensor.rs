use num_complex::Complex;

use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Axis extents `(n_ap, n_ap_ant, n_ue_ant, n_subc)`.
pub type Dims4 = [usize; 4];

/// Complex tensor indexed `(AP, AP antenna, UE antenna, subcarrier)`,
/// stored row-major so the subcarrier axis is contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor4<T> {
    dims: Dims4,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexTensor4<T> {
    pub fn new(dims: Dims4, data: Vec<Complex<T>>) -> Result<Self> {
        ensure!(dims.iter().all(|&d| d > 0), "tensor dims must be positive, got {dims:?}");
        let len: usize = dims.iter().product();
        ensure!(
            data.len() == len,
            "tensor data length {} does not match dims {dims:?}",
            data.len()
        );
        ensure!(
            data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "tensor entries must be finite"
        );
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Dims4) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "tensor dims must be positive");
        let len = dims.iter().product();
        Self { dims, data: vec![Complex::new(T::zero(), T::zero()); len] }
    }

    #[inline]
    pub fn dims(&self) -> Dims4 {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, a: usize, b: usize, u: usize, w: usize) -> usize {
        let [_, nb, nu, nw] = self.dims;
        ((a * nb + b) * nu + u) * nw + w
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, u: usize, w: usize) -> Complex<T> {
        self.data[self.offset(a, b, u, w)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, u: usize, w: usize, z: Complex<T>) {
        let o = self.offset(a, b, u, w);
        self.data[o] = z;
    }

    /// Subcarrier slice for one `(AP, AP antenna, UE antenna)` triple.
    #[inline]
    pub fn lane(&self, a: usize, b: usize, u: usize) -> &[Complex<T>] {
        let o = self.offset(a, b, u, 0);
        &self.data[o..o + self.dims[3]]
    }

    #[inline]
    pub fn lane_mut(&mut self, a: usize, b: usize, u: usize) -> &mut [Complex<T>] {
        let o = self.offset(a, b, u, 0);
        let n = self.dims[3];
        &mut self.data[o..o + n]
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn scale(&mut self, k: Complex<T>) {
        self.data.iter_mut().for_each(|z| *z = *z * k);
    }

    /// Inverse of [`vectorize`].
    pub fn from_vec(dims: Dims4, v: Vec<Complex<T>>) -> Result<Self> {
        Self::new(dims, v)
    }
}

/// Flattens a tensor with the subcarrier (tap) axis varying fastest,
/// then UE antenna, AP antenna and AP. This is the storage order, so the
/// layout of serialized features is frozen by it.
pub fn vectorize<T: Real>(t: &ComplexTensor4<T>) -> Vec<Complex<T>> {
    t.data.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    #[test]
    fn vectorize_keeps_subcarrier_fastest() {
        let t = ComplexTensor4::new([1, 1, 1, 3], vec![C::new(1., 0.), C::new(2., 0.), C::new(3., 0.)])
            .unwrap();
        assert_eq!(vectorize(&t), vec![C::new(1., 0.), C::new(2., 0.), C::new(3., 0.)]);

        let mut t = ComplexTensor4::<f64>::zeros([2, 2, 1, 2]);
        t.set(1, 0, 0, 1, C::new(5., 0.));
        // a=1,b=0,u=0,w=1 -> ((1*2+0)*1+0)*2+1 = 5
        assert_eq!(vectorize(&t)[5], C::new(5., 0.));
    }

    #[test]
    fn vectorize_round_trip_and_norm() {
        let data: Vec<C> = (0..24).map(|i| C::new(i as f64 * 0.5, -(i as f64))).collect();
        let t = ComplexTensor4::new([2, 3, 1, 4], data).unwrap();
        let v = vectorize(&t);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - t.frobenius_norm()).abs() < 1e-12);
        assert_eq!(ComplexTensor4::from_vec(t.dims(), v).unwrap(), t);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(ComplexTensor4::<f64>::new([1, 1, 1, 2], vec![C::new(0., 0.)]).is_err());
        assert!(ComplexTensor4::<f64>::new([0, 1, 1, 1], vec![]).is_err());
        assert!(ComplexTensor4::new([1, 1, 1, 1], vec![C::new(f64::NAN, 0.)]).is_err());
    }
}
