use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Layer, MlpSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.epsilon > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// First/second moment accumulators and the step counter.
#[derive(Clone, Debug)]
pub(crate) struct AdamState<T> {
    pub step: u64,
    m: Gradients<T>,
    v: Gradients<T>,
}

impl<T: Real> AdamState<T> {
    pub fn new(spec: &MlpSpec) -> Self {
        Self { step: 0, m: Gradients::zeros(spec), v: Gradients::zeros(spec) }
    }

    pub fn update(&mut self, params: &mut [Layer<T>], grads: &Gradients<T>, cfg: &AdamConfig) {
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.epsilon));
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.layers.iter_mut())
            .zip(self.v.layers.iter_mut())
        {
            let ps = p.params_mut();
            let gs = g.params();
            let ms = m.params_mut();
            let vs = v.params_mut();
            for (((p, &g), m), v) in ps.zip(gs).zip(ms).zip(vs) {
                *m = b1 * *m + one_b1 * g;
                *v = b2 * *v + one_b2 * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::MlpModel;
    use crate::numkernel::RealMatrix;

    fn scalar_model(w: f64) -> MlpModel<f64> {
        let spec = MlpSpec::new(vec![1, 1]).unwrap();
        let layer = Layer { weights: RealMatrix::new(1, 1, vec![w]).unwrap(), bias: vec![0.0] };
        MlpModel::from_layers(spec, vec![layer], 0).unwrap()
    }

    fn grad_of(model: &MlpModel<f64>, gw: f64) -> Gradients<f64> {
        let mut g = Gradients::zeros(model.spec());
        g.layers[0].weights.data_mut()[0] = gw;
        g
    }

    #[test]
    fn quadratic_follows_the_scalar_recurrence() {
        // f(w) = w², gradient 2w. Reference values come from evaluating the
        // bias-corrected recurrence by hand in double precision.
        let mut m = scalar_model(1.0);
        let cfg = AdamConfig { learning_rate: 0.1, ..Default::default() };
        let mut path = Vec::new();
        for _ in 0..50 {
            let w = m.layers()[0].weights.data()[0];
            let g = grad_of(&m, 2.0 * w);
            m.adam_step(&g, &cfg).unwrap();
            path.push(m.layers()[0].weights.data()[0]);
        }
        // monotone until momentum overshoots the minimum at step 12
        let mut prev = 1.0f64;
        for &w in &path[..11] {
            assert!(w.abs() < prev);
            prev = w.abs();
        }
        assert!((path[9] - 0.07624915560691176).abs() < 1e-12);
        assert!((path[10] - 0.005131501948056727).abs() < 1e-12);
        assert!((path[49] - -0.0048182232226613286).abs() < 1e-12);
        assert!(path[49].abs() < 1.0);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = scalar_model(0.7);
        let g = grad_of(&m, 0.0);
        m.adam_step(&g, &AdamConfig::default()).unwrap();
        assert_eq!(m.layers()[0].weights.data()[0], 0.7);
        assert_eq!(m.adam_steps(), 1);
    }

    #[test]
    fn first_step_is_sign_like() {
        let cfg = AdamConfig::default();
        for g in [1e-3, 0.5, -7.0, 1e4] {
            let mut m = scalar_model(0.0);
            let grads = grad_of(&m, g);
            m.adam_step(&grads, &cfg).unwrap();
            let moved = m.layers()[0].weights.data()[0];
            // update = lr * g / (|g| + eps)
            let expect = -cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((moved - expect).abs() < 1e-15);
            assert!((moved.abs() - cfg.learning_rate).abs() < cfg.learning_rate * 1e-4);
        }
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig::default().validate().is_ok());
        assert!(AdamConfig { beta1: 1.0, ..Default::default() }.validate().is_err());
        assert!(AdamConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut m = scalar_model(0.0);
        let other = Gradients::<f64>::zeros(&MlpSpec::new(vec![2, 1]).unwrap());
        assert!(m.adam_step(&other, &AdamConfig::default()).is_err());
    }
}
