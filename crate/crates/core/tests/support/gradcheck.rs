//! Finite-difference gradient checks against an independent forward pass
//! and independently written loss formulas.

use chartlab_core::neuralnet::{ae_loss, mse_loss, siamese_loss, triplet_loss, Gradients, MlpModel, MlpSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-5;
/// Central differences cannot resolve gradients much below `ε·|L|/h`
/// (about `2e-11·|L|` here); below `ZERO_FLOOR·max(1, |L|)` the error is
/// measured relative to that floor instead of the gradient itself.
pub const ZERO_FLOOR: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Triplet,
    Mse,
    Siamese,
    Autoencoder,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub max_rel: f64,
    pub checked: usize,
    /// Coordinates whose ±h probes straddle a ReLU or hinge kink.
    pub skipped: usize,
}

/// Hidden and output widths are capped at 16, 8, 2 (input up to 32).
pub fn random_widths(rng: &mut ChaCha8Rng, kind: LossKind) -> Vec<usize> {
    let caps = [32, 16, 8, 2];
    let depth = rng.random_range(2..=4);
    let mut w: Vec<usize> = caps[..depth].iter().map(|&c| rng.random_range(1..=c)).collect();
    w[0] = w[0].max(2);
    if kind == LossKind::Autoencoder {
        // the reconstruction must match the input width
        let last = *w.last().unwrap();
        w[0] = last.max(1);
    }
    w
}

struct Problem {
    kind: LossKind,
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    margin: f64,
    pairs: Vec<(usize, usize)>,
    gamma: Vec<f64>,
}

fn forward(model: &MlpModel<f64>, x: &[f64], pattern: &mut Vec<bool>) -> Vec<f64> {
    let layers = model.layers();
    let mut a = x.to_vec();
    for (l, layer) in layers.iter().enumerate() {
        let mut z: Vec<f64> = layer.bias.clone();
        for (i, zi) in z.iter_mut().enumerate() {
            for (j, &aj) in a.iter().enumerate() {
                *zi += layer.weights[(i, j)] * aj;
            }
        }
        if l + 1 < layers.len() {
            pattern.extend(z.iter().map(|&v| v > 0.0));
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        } else {
            a = z;
        }
    }
    a
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Loss straight from its definition, plus the kink pattern.
fn oracle(model: &MlpModel<f64>, p: &Problem) -> (f64, Vec<bool>) {
    let mut pattern = Vec::new();
    let out: Vec<Vec<f64>> = p.inputs.iter().map(|x| forward(model, x, &mut pattern)).collect();
    let n = match p.kind {
        LossKind::Triplet => out.len() / 3,
        _ => out.len(),
    } as f64;
    let loss = match p.kind {
        LossKind::Triplet => {
            let k = out.len() / 3;
            let mut s = 0.0;
            for t in 0..k {
                let h = dist(&out[t], &out[k + t]) - dist(&out[t], &out[2 * k + t]) + p.margin;
                pattern.push(h > 0.0);
                s += h.max(0.0);
            }
            s / n
        }
        LossKind::Mse => out.iter().zip(&p.targets).map(|(o, t)| dist(o, t).powi(2)).sum::<f64>() / n,
        LossKind::Autoencoder => out.iter().zip(&p.inputs).map(|(o, x)| dist(o, x).powi(2)).sum::<f64>() / n,
        LossKind::Siamese => {
            let mut s = 0.0;
            for (&(i, j), &g) in p.pairs.iter().zip(&p.gamma) {
                s += g * (dist(&out[i], &out[j]) - dist(&p.targets[i], &p.targets[j])).powi(2);
            }
            s / n
        }
    };
    (loss, pattern)
}

fn analytic(model: &MlpModel<f64>, p: &Problem) -> Gradients<f64> {
    let mut outs = Vec::new();
    let mut caches = Vec::new();
    for x in &p.inputs {
        let (y, c) = model.forward_cached(x).unwrap();
        outs.push(y);
        caches.push(c);
    }
    let out_grads: Vec<Vec<f64>> = match p.kind {
        LossKind::Triplet => {
            let k = outs.len() / 3;
            let t = triplet_loss(&outs[..k], &outs[k..2 * k], &outs[2 * k..], p.margin).unwrap();
            t.grad_anchor.into_iter().chain(t.grad_close).chain(t.grad_far).collect()
        }
        LossKind::Mse => mse_loss(&outs, &p.targets).unwrap().grad,
        LossKind::Autoencoder => ae_loss(&p.inputs, &outs).unwrap().grad,
        LossKind::Siamese => siamese_loss(&outs, &p.targets, &p.pairs).unwrap().grad,
    };
    let mut grads = Gradients::zeros(model.spec());
    for (c, g) in caches.iter().zip(&out_grads) {
        model.backward_into(c, g, &mut grads, false).unwrap();
    }
    grads
}

fn setup(kind: LossKind, widths: &[usize], batch: usize, seed: u64) -> (MlpModel<f64>, Problem) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = MlpSpec::new(widths.to_vec()).unwrap();
    let mut model = MlpModel::glorot(&spec, seed);
    for layer in model.layers_mut() {
        for b in layer.bias.iter_mut() {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    let (d_in, d_out) = (widths[0], *widths.last().unwrap());
    let mut vecs = |n: usize, d: usize| -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect()).collect()
    };
    let n_inputs = if kind == LossKind::Triplet { 3 * batch } else { batch };
    let inputs = vecs(n_inputs, d_in);
    let targets = match kind {
        LossKind::Mse => vecs(batch, d_out),
        LossKind::Siamese => vecs(batch, 3),
        _ => Vec::new(),
    };
    let pairs: Vec<(usize, usize)> =
        if kind == LossKind::Siamese { (0..batch).flat_map(|i| (i + 1..batch).map(move |j| (i, j))).collect() } else { vec![] };
    let margin = rng.random_range(0.0..2.0);
    let mut p = Problem { kind, inputs, targets, margin, pairs, gamma: Vec::new() };
    if kind == LossKind::Siamese {
        // the pair weights are constants of the loss, fixed at the base point
        let mut pat = Vec::new();
        let out: Vec<Vec<f64>> = p.inputs.iter().map(|x| forward(&model, x, &mut pat)).collect();
        p.gamma = p
            .pairs
            .iter()
            .map(|&(i, j)| 1.0 / (dist(&out[i], &out[j]) + chartlab_core::neuralnet::SIAMESE_EPS))
            .collect();
    }
    (model, p)
}

/// Compares every parameter's analytic gradient to a central difference.
pub fn check(kind: LossKind, widths: &[usize], batch: usize, seed: u64) -> Outcome {
    let (model, p) = setup(kind, widths, batch, seed);
    let grads = analytic(&model, &p);
    let floor = ZERO_FLOOR * oracle(&model, &p).0.abs().max(1.0);
    let mut out = Outcome { max_rel: 0.0, checked: 0, skipped: 0 };
    for l in 0..model.layers().len() {
        let n_w = model.layers()[l].weights.data().len();
        let n_b = model.layers()[l].bias.len();
        for idx in 0..n_w + n_b {
            let probe = |delta: f64| {
                let mut m = model.clone();
                let layer = &mut m.layers_mut()[l];
                if idx < n_w {
                    layer.weights.data_mut()[idx] += delta;
                } else {
                    layer.bias[idx - n_w] += delta;
                }
                oracle(&m, &p)
            };
            let (lp, pp) = probe(H);
            let (lm, pm) = probe(-H);
            if pp != pm {
                out.skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * H);
            let g = &grads.layers[l];
            let a = if idx < n_w { g.weights.data()[idx] } else { g.bias[idx - n_w] };
            let scale = a.abs().max(numeric.abs());
            let err = (a - numeric).abs() / scale.max(floor);
            out.max_rel = out.max_rel.max(err);
            out.checked += 1;
        }
    }
    out
}

/// One randomized trial: widths, batch size and data all from `seed`.
pub fn random_trial(kind: LossKind, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let widths = random_widths(&mut rng, kind);
    let batch = rng.random_range(2..=6);
    check(kind, &widths, batch, seed)
}
