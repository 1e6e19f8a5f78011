use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use crate::error::{ensure, Error, Result};
use crate::numkernel::{matrix::dot, RealMatrix};
use crate::rng;
use crate::scalar::Real;

/// Layer widths, input first. Hidden layers use ReLU, the last is linear.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
}

impl MlpSpec {
    pub fn new(widths: impl Into<Vec<usize>>) -> Result<Self> {
        let widths = widths.into();
        ensure!(widths.len() >= 2, "an MLP needs at least input and output widths");
        ensure!(widths.iter().all(|&w| w > 0), "layer widths must be positive: {widths:?}");
        Ok(Self { widths })
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("validated spec")
    }
}

/// Affine layer; `weights` is `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weights: RealMatrix<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Layer<T> {
    pub(crate) fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { weights: RealMatrix::zeros(n_out, n_in), bias: vec![T::zero(); n_out] }
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &T> {
        self.weights.data().iter().chain(&self.bias)
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.data_mut().iter_mut().chain(self.bias.iter_mut())
    }
}

/// Parameter gradients, shaped like the model's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros(spec: &MlpSpec) -> Self {
        Self { layers: spec.widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(Layer::params)
    }

    pub fn scale(&mut self, k: T) {
        self.layers.iter_mut().flat_map(Layer::params_mut).for_each(|g| *g *= k);
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.layers.iter_mut().flat_map(Layer::params_mut).zip(other.iter()) {
            *a += *b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }

    fn same_shape(&self, spec: &MlpSpec) -> bool {
        self.layers.len() + 1 == spec.widths.len()
            && self.layers.iter().zip(spec.widths.windows(2)).all(|(l, w)| {
                l.weights.shape() == (w[1], w[0]) && l.bias.len() == w[1]
            })
    }
}

/// Activations recorded by [`MlpModel::forward_cached`].
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    version: u64,
    /// Input to each layer (the network input, then post-ReLU activations).
    inputs: Vec<Vec<T>>,
    /// Pre-activations of each hidden layer.
    hidden_pre: Vec<Vec<T>>,
}

/// MLP parameters together with their Adam state.
#[derive(Clone, Debug)]
pub struct MlpModel<T> {
    spec: MlpSpec,
    layers: Vec<Layer<T>>,
    adam: AdamState<T>,
    seed: u64,
    /// Bumped on every parameter update; caches from older versions are stale.
    version: u64,
}

impl<T: Real> MlpModel<T> {
    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero biases.
    pub fn glorot(spec: &MlpSpec, seed: u64) -> Self {
        let mut r = rng::stream(&[seed, rng::tag::INIT]);
        let layers = spec
            .widths
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let bound = (6.0 / (n_in + n_out) as f64).sqrt();
                let mut layer = Layer::zeros(n_in, n_out);
                for x in layer.weights.data_mut() {
                    *x = T::lit(r.random_range(-bound..=bound));
                }
                layer
            })
            .collect();
        Self::from_layers(spec.clone(), layers, seed).expect("shapes follow the spec")
    }

    /// Builds a model around given parameters, with fresh Adam state.
    pub fn from_layers(spec: MlpSpec, layers: Vec<Layer<T>>, seed: u64) -> Result<Self> {
        let probe = Gradients { layers };
        ensure!(probe.same_shape(&spec), "layer shapes do not match widths {:?}", spec.widths);
        let adam = AdamState::new(&spec);
        Ok(Self { spec, layers: probe.layers, adam, seed, version: 0 })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Mutable parameter access; invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        self.version += 1;
        &mut self.layers
    }

    pub fn adam_steps(&self) -> u64 {
        self.adam.step
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.bias.len() * (1 + l.weights.cols())).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(Layer::params)
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        ensure!(
            x.len() == self.spec.input_width(),
            "input length {} does not match network input width {}",
            x.len(),
            self.spec.input_width()
        );
        Ok(())
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut h = affine(&self.layers[0], x);
        for layer in &self.layers[1..] {
            relu_in_place(&mut h);
            h = affine(layer, &h);
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut hidden_pre = Vec::with_capacity(self.layers.len() - 1);
        inputs.push(x.to_vec());
        let mut z = affine(&self.layers[0], x);
        for layer in &self.layers[1..] {
            let mut a = z.clone();
            relu_in_place(&mut a);
            hidden_pre.push(z);
            z = affine(layer, &a);
            inputs.push(a);
        }
        Ok((z, ForwardCache { version: self.version, inputs, hidden_pre }))
    }

    /// Gradients of a scalar loss given `dL/d(output)`.
    pub fn backward(&self, cache: &ForwardCache<T>, out_grad: &[T]) -> Result<(Gradients<T>, Vec<T>)> {
        let mut grads = Gradients::zeros(&self.spec);
        let input_grad = self.backward_into(cache, out_grad, &mut grads, true)?;
        Ok((grads, input_grad.expect("requested")))
    }

    /// Accumulates parameter gradients into `grads`; returns `dL/d(input)`
    /// when `want_input_grad` is set.
    pub fn backward_into(
        &self,
        cache: &ForwardCache<T>,
        out_grad: &[T],
        grads: &mut Gradients<T>,
        want_input_grad: bool,
    ) -> Result<Option<Vec<T>>> {
        if cache.version != self.version {
            return Err(Error::Contract("stale forward cache: model changed since forward pass".into()));
        }
        ensure!(
            out_grad.len() == self.spec.output_width(),
            "output gradient length {} does not match width {}",
            out_grad.len(),
            self.spec.output_width()
        );
        ensure!(grads.same_shape(&self.spec), "gradient buffer shape mismatch");
        let mut delta = out_grad.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &cache.inputs[l];
            let g = &mut grads.layers[l];
            for (i, &d) in delta.iter().enumerate() {
                g.bias[i] += d;
                if d != T::zero() {
                    for (gw, &x) in g.weights.row_mut(i).iter_mut().zip(input) {
                        *gw += d * x;
                    }
                }
            }
            if l == 0 && !want_input_grad {
                return Ok(None);
            }
            let mut back = vec![T::zero(); layer.weights.cols()];
            for (i, &d) in delta.iter().enumerate() {
                if d != T::zero() {
                    for (b, &w) in back.iter_mut().zip(layer.weights.row(i)) {
                        *b += d * w;
                    }
                }
            }
            if l == 0 {
                return Ok(Some(back));
            }
            // ReLU'(0) = 0
            for (b, &z) in back.iter_mut().zip(&cache.hidden_pre[l - 1]) {
                if z <= T::zero() {
                    *b = T::zero();
                }
            }
            delta = back;
        }
        unreachable!("loop returns at layer 0")
    }

    /// One bias-corrected Adam update.
    pub fn adam_step(&mut self, grads: &Gradients<T>, cfg: &AdamConfig) -> Result<()> {
        ensure!(grads.same_shape(&self.spec), "gradient shapes do not match the model");
        self.adam.update(&mut self.layers, grads, cfg);
        self.version += 1;
        // NaN distances switch hinges off instead of poisoning the loss, so
        // a diverged model has to be caught here
        if !self.params().all(|p| p.is_finite()) {
            return Err(Error::Numeric("parameters became non-finite after an Adam step".into()));
        }
        Ok(())
    }

    /// Rewrites the first layer so the network consumes `x` directly where
    /// it was trained on `(x − shift) ⊙ scale`.
    pub fn fold_input_affine(&mut self, scale: &[T], shift: &[T]) -> Result<()> {
        let n = self.spec.input_width();
        ensure!(scale.len() == n && shift.len() == n, "affine length must equal input width {n}");
        let first = &mut self.layers[0];
        for i in 0..first.bias.len() {
            let row = first.weights.row_mut(i);
            let mut offset = T::zero();
            for ((w, &s), &m) in row.iter_mut().zip(scale).zip(shift) {
                *w *= s;
                offset += *w * m;
            }
            first.bias[i] -= offset;
        }
        self.version += 1;
        Ok(())
    }

    /// Rewrites the output layer so the network computes `scale ⊙ y + shift`.
    pub fn fold_output_affine(&mut self, scale: &[T], shift: &[T]) -> Result<()> {
        let n = self.spec.output_width();
        ensure!(scale.len() == n && shift.len() == n, "affine length must equal output width {n}");
        let last = self.layers.last_mut().expect("nonempty");
        for i in 0..n {
            last.weights.row_mut(i).iter_mut().for_each(|w| *w *= scale[i]);
            last.bias[i] = last.bias[i] * scale[i] + shift[i];
        }
        self.version += 1;
        Ok(())
    }
}

#[inline]
fn affine<T: Real>(layer: &Layer<T>, x: &[T]) -> Vec<T> {
    layer
        .weights
        .iter_rows()
        .zip(&layer.bias)
        .map(|(row, &b)| b + dot(row, x))
        .collect()
}

#[inline]
fn relu_in_place<T: Real>(h: &mut [T]) {
    for v in h {
        if *v <= T::zero() {
            *v = T::zero();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(w: &[usize]) -> MlpSpec {
        MlpSpec::new(w.to_vec()).unwrap()
    }

    #[test]
    fn glorot_bounds_zero_bias_and_determinism() {
        let s = spec(&[4, 3, 2]);
        let m = MlpModel::<f64>::glorot(&s, 7);
        let bounds = [(6.0f64 / 7.0).sqrt(), (6.0f64 / 5.0).sqrt()];
        for (l, b) in m.layers().iter().zip(bounds) {
            assert!(l.weights.data().iter().all(|w| w.abs() <= b));
            assert!(l.bias.iter().all(|&x| x == 0.0));
        }
        let again = MlpModel::<f64>::glorot(&s, 7);
        assert_eq!(m.layers(), again.layers());
        assert_ne!(MlpModel::<f64>::glorot(&s, 8).layers(), m.layers());
        assert_eq!(m.param_count(), 4 * 3 + 3 + 3 * 2 + 2);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let s = spec(&[3, 5, 2]);
        let layers = vec![Layer::zeros(3, 5), Layer::zeros(5, 2)];
        let m = MlpModel::<f64>::from_layers(s, layers, 0).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_linear_layer_by_hand() {
        let s = spec(&[2, 3]);
        let layer = Layer {
            weights: RealMatrix::new(3, 2, vec![1.0, 2.0, -1.0, 0.5, 0.0, 3.0]).unwrap(),
            bias: vec![0.1, -0.2, 1.0],
        };
        let m = MlpModel::from_layers(s, vec![layer], 0).unwrap();
        let y = m.forward(&[2.0, -1.0]).unwrap();
        // [1*2+2*-1+0.1, -1*2+0.5*-1-0.2, 0*2+3*-1+1]
        let expect = [0.1f64, -2.7, -2.0];
        for (a, b) in y.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn relu_clamps_negative_preactivation() {
        let s = spec(&[1, 1, 1]);
        let id = || Layer { weights: RealMatrix::identity(1), bias: vec![0.0] };
        let m = MlpModel::from_layers(s, vec![id(), id()], 0).unwrap();
        assert_eq!(m.forward(&[-1.0]).unwrap(), vec![0.0]);
        assert_eq!(m.forward(&[2.5]).unwrap(), vec![2.5]);
        // subgradient at exactly zero is zero
        let (_, cache) = m.forward_cached(&[0.0]).unwrap();
        let (g, gin) = m.backward(&cache, &[1.0]).unwrap();
        assert_eq!(gin, vec![0.0]);
        assert_eq!(g.layers[0].weights.data(), &[0.0]);
    }

    #[test]
    fn length_mismatch_and_stale_cache() {
        let mut m = MlpModel::<f64>::glorot(&spec(&[3, 2]), 1);
        assert!(m.forward(&[1.0]).is_err());
        let (_, cache) = m.forward_cached(&[1.0, 2.0, 3.0]).unwrap();
        assert!(m.backward(&cache, &[1.0]).is_err());
        let g = Gradients::zeros(m.spec());
        m.adam_step(&g, &AdamConfig::default()).unwrap();
        assert!(m.backward(&cache, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let m = MlpModel::<f64>::glorot(&spec(&[5, 4, 3]), 2);
        let (_, cache) = m.forward_cached(&[0.1, -0.3, 0.7, 1.0, -2.0]).unwrap();
        let (g, gin) = m.backward(&cache, &[0.0; 3]).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
        assert!(gin.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn folding_an_affine_output() {
        let mut m = MlpModel::<f64>::glorot(&spec(&[3, 4, 2]), 5);
        let x = [0.3, -0.1, 0.9];
        let y = m.forward(&x).unwrap();
        m.fold_output_affine(&[2.0, 0.5], &[10.0, -1.0]).unwrap();
        let z = m.forward(&x).unwrap();
        assert!((z[0] - (2.0 * y[0] + 10.0)).abs() < 1e-12);
        assert!((z[1] - (0.5 * y[1] - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let m = MlpModel::<f32>::glorot(&spec(&[4, 8, 2]), 3);
        let y = m.forward(&[1.0, 0.5, -0.5, 0.25]).unwrap();
        assert_eq!(y.len(), 2);
        assert!(y.iter().all(|v| v.is_finite()));
    }
}
