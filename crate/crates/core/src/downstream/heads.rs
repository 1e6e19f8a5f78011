use rand::seq::SliceRandom;

use super::{check_rows, ChartPoints, CoordinateKind, HeadConfig, Model};
use crate::chartmetrics::normalize_chart;
use crate::error::{ensure, Error, Result};
use crate::neuralnet::{mse_loss, siamese_loss, Gradients, MlpModel, MlpSpec};
use crate::numkernel::{euclidean, RealMatrix};
use crate::rng::{stream, tag};
use crate::Matrix;

/// Hidden widths of the positioning and charting heads.
pub const HEAD_HIDDEN: [usize; 4] = [12, 8, 6, 4];

/// A trained head with its predictions on the held-out rows.
#[derive(Clone, Debug)]
pub struct TrainedHead {
    pub model: Model,
    pub chart: ChartPoints,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

pub(crate) fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(output)).collect()
}

/// Per-column mean and inverse spread.
#[derive(Clone, Debug)]
pub(crate) struct Standardizer {
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(m: &Matrix) -> Self {
        let n = m.rows().max(1) as f64;
        let mut mean = vec![0.0; m.cols()];
        for row in m.iter_rows() {
            for (a, &x) in mean.iter_mut().zip(row) {
                *a += x / n;
            }
        }
        let mut var = vec![0.0; m.cols()];
        for row in m.iter_rows() {
            for ((v, &x), &mu) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - mu) * (x - mu) / n;
            }
        }
        let inv_std = var.iter().map(|&v| if v > 1e-24 { 1.0 / v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, inv_std }
    }

    pub fn apply(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for i in 0..out.rows() {
            for ((x, &mu), &s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.inv_std) {
                *x = (*x - mu) * s;
            }
        }
        out
    }
}

/// Minibatch loop over `n` rows. `step` sees each batch's row indices,
/// applies one update and returns the batch loss.
pub(crate) fn run_epochs(
    model: &mut Model,
    n: usize,
    cfg: &HeadConfig,
    stream_key: u64,
    min_batch: usize,
    mut step: impl FnMut(&mut Model, &[usize]) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = stream(&[cfg.seed, tag::HEAD, stream_key, epoch as u64]);
        order.shuffle(&mut rng);
        let (mut total, mut count) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size).filter(|b| b.len() >= min_batch) {
            let loss = step(model, batch)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("head loss became {loss} in epoch {epoch}")));
            }
            total += loss;
            count += 1;
        }
        losses.push(total / count.max(1) as f64);
    }
    Ok(losses)
}

/// Forward, loss, backward and one Adam step on a batch.
pub(crate) fn gradient_step(
    model: &mut Model,
    inputs: &Matrix,
    batch: &[usize],
    cfg: &HeadConfig,
    loss: impl FnOnce(&[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)>,
) -> Result<f64> {
    let mut outs = Vec::with_capacity(batch.len());
    let mut caches = Vec::with_capacity(batch.len());
    for &i in batch {
        let (y, c) = model.forward_cached(inputs.row(i))?;
        outs.push(y);
        caches.push(c);
    }
    let (value, grad) = loss(&outs)?;
    let mut grads = Gradients::zeros(model.spec());
    for (c, g) in caches.iter().zip(&grad) {
        model.backward_into(c, g, &mut grads, false)?;
    }
    if !grads.is_finite() {
        return Err(Error::Numeric("non-finite head gradient".into()));
    }
    model.adam_step(&grads, &cfg.adam)?;
    Ok(value)
}

/// Positioning head trained with MSE on `(embeddings, positions)`.
/// Returns metric predictions for `test_embeddings`.
pub fn train_pos_head(
    embeddings: &Matrix,
    positions: &Matrix,
    test_embeddings: &Matrix,
    cfg: &HeadConfig,
) -> Result<TrainedHead> {
    fit_regressor(embeddings, positions, test_embeddings, &HEAD_HIDDEN, cfg)
}

pub(crate) fn fit_regressor(
    inputs: &Matrix,
    positions: &Matrix,
    test_inputs: &Matrix,
    hidden: &[usize],
    cfg: &HeadConfig,
) -> Result<TrainedHead> {
    cfg.validate()?;
    check_rows(inputs, positions, "positioning head")?;
    ensure!(inputs.rows() >= 1, "positioning head needs training samples");
    ensure!(
        positions.cols() == cfg.output_dim,
        "positions have {} coordinates, head outputs {}",
        positions.cols(),
        cfg.output_dim
    );
    ensure!(test_inputs.cols() == inputs.cols(), "test inputs have the wrong width");
    if !positions.is_finite() {
        return Err(Error::Data("ground-truth positions missing for some training samples".into()));
    }
    let x_std = Standardizer::fit(inputs);
    let y_std = Standardizer::fit(positions);
    let x = x_std.apply(inputs);
    let y = y_std.apply(positions);
    let spec = MlpSpec::new(widths(inputs.cols(), hidden, cfg.output_dim))?;
    let mut model = MlpModel::glorot(&spec, cfg.seed);
    let epoch_losses = run_epochs(&mut model, x.rows(), cfg, 0, 1, |m, batch| {
        gradient_step(m, &x, batch, cfg, |outs| {
            let target: Vec<Vec<f64>> = batch.iter().map(|&i| y.row(i).to_vec()).collect();
            let lg = mse_loss(outs, &target)?;
            Ok((lg.loss, lg.grad))
        })
    })?;
    model.fold_input_affine(&x_std.inv_std, &x_std.mean)?;
    let scale: Vec<f64> = y_std.inv_std.iter().map(|s| 1.0 / s).collect();
    model.fold_output_affine(&scale, &y_std.mean)?;
    let chart = ChartPoints::new(predict_batch(&model, test_inputs)?, CoordinateKind::Metric)?;
    Ok(TrainedHead { model, chart, epoch_losses })
}

/// Self-supervised chart head: every unordered pair in a minibatch is
/// fitted to its embedding distance. Returns the normalized test chart.
/// Ground-truth positions are never an input here.
pub fn train_cc_siamese(embeddings: &Matrix, test_embeddings: &Matrix, cfg: &HeadConfig) -> Result<TrainedHead> {
    fit_siamese(embeddings, test_embeddings, &HEAD_HIDDEN, cfg)
}

/// Mean pair distance over a fixed prefix of rows; used to bring distance
/// targets to unit scale (the chart is normalized afterwards anyway).
fn distance_scale(m: &Matrix) -> f64 {
    let n = m.rows().min(400);
    let (mut s, mut c) = (0.0, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            s += euclidean(m.row(i), m.row(j));
            c += 1;
        }
    }
    if c == 0 || s <= 0.0 {
        1.0
    } else {
        s / c as f64
    }
}

pub(crate) fn fit_siamese(
    inputs: &Matrix,
    test_inputs: &Matrix,
    hidden: &[usize],
    cfg: &HeadConfig,
) -> Result<TrainedHead> {
    cfg.validate()?;
    ensure!(inputs.rows() >= 2, "Siamese head needs at least two samples");
    ensure!(test_inputs.cols() == inputs.cols(), "test inputs have the wrong width");
    let x_std = Standardizer::fit(inputs);
    let x = x_std.apply(inputs);
    let inv_scale = 1.0 / distance_scale(inputs);
    let targets = inputs.map(|v| v * inv_scale);
    let spec = MlpSpec::new(widths(inputs.cols(), hidden, cfg.output_dim))?;
    let mut model = MlpModel::glorot(&spec, cfg.seed);
    let epoch_losses = run_epochs(&mut model, x.rows(), cfg, 1, 2, |m, batch| {
        gradient_step(m, &x, batch, cfg, |outs| {
            let emb: Vec<Vec<f64>> = batch.iter().map(|&i| targets.row(i).to_vec()).collect();
            let k = batch.len();
            let pairs: Vec<(usize, usize)> =
                (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
            let lg = siamese_loss(outs, &emb, &pairs)?;
            Ok((lg.loss, lg.grad))
        })
    })?;
    model.fold_input_affine(&x_std.inv_std, &x_std.mean)?;
    let raw = ChartPoints::new(predict_batch(&model, test_inputs)?, CoordinateKind::Arbitrary)?;
    let chart = normalize_chart(&raw)?;
    Ok(TrainedHead { model, chart, epoch_losses })
}

/// Forward pass of a trained head.
pub fn predict(model: &Model, x: &[f64]) -> Result<Vec<f64>> {
    model.forward(x)
}

/// Row-wise [`predict`].
pub fn predict_batch(model: &Model, x: &Matrix) -> Result<Matrix> {
    let mut out = RealMatrix::zeros(x.rows(), model.spec().output_width());
    for i in 0..x.rows() {
        out.row_mut(i).copy_from_slice(&model.forward(x.row(i))?);
    }
    Ok(out)
}
