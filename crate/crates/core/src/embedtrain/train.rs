use super::corpus::{Corpus, Draw};
use super::log::{epoch_mean, LogPhase, TrainLogRow};
use super::sampler::{Partition, SampleRef, Triplet, TripletSampler};
use super::TrainConfig;
use crate::downstream::{predict_batch, HEAD_HIDDEN};
use crate::error::{ensure, Error, Result};
use crate::neuralnet::{mse_loss, triplet_loss, ForwardCache, Gradients, MlpModel, MlpSpec};
use crate::numkernel::euclidean;
use crate::preprocess::AugmentConfig;
use crate::rng::{stream, tag};
use crate::Matrix;

type Model = MlpModel<f64>;

/// A trained embedding with its log.
#[derive(Clone, Debug)]
pub struct EmbeddingRun {
    pub model: Model,
    pub log: Vec<TrainLogRow>,
    /// Partition members that never anchor a triplet, summed over scenarios.
    pub skipped_anchors: usize,
}

impl EmbeddingRun {
    pub fn train_loss(&self, epoch: usize) -> Option<f64> {
        epoch_mean(&self.log, epoch, LogPhase::Train)
    }

    pub fn test_loss(&self, epoch: usize) -> Option<f64> {
        epoch_mean(&self.log, epoch, LogPhase::Test)
    }
}

/// Semi-supervised result: the embedding plus one auxiliary positioning
/// head (outputs in meters) per supervised scenario id.
#[derive(Clone, Debug)]
pub struct SemiRun {
    pub run: EmbeddingRun,
    pub heads: Vec<(u32, Model)>,
}

/// Auxiliary head state during semi-supervised training. The head works
/// on standardized positions; `scale`/`shift` map its output to meters.
struct AuxHead {
    scenario: usize,
    scenario_id: u32,
    model: Model,
    scale: Vec<f64>,
    shift: Vec<f64>,
}

pub(crate) fn embedding_spec(input: usize, cfg: &TrainConfig) -> Result<MlpSpec> {
    MlpSpec::new(vec![input, cfg.hidden_width(), cfg.embed_dim])
}

/// Per-scenario model inputs for one pass: clean matrices are borrowed
/// from the corpus cache, augmented ones are owned.
pub(crate) enum Inputs<'a> {
    Borrowed(&'a [Matrix]),
    Owned(Vec<Matrix>),
}

impl Inputs<'_> {
    pub fn get(&self, s: usize) -> &Matrix {
        match self {
            Inputs::Borrowed(m) => &m[s],
            Inputs::Owned(m) => &m[s],
        }
    }
}

pub(crate) fn augmented_inputs<'a>(
    corpus: &'a Corpus,
    part: Partition,
    draw: Draw,
    aug: Option<&AugmentConfig>,
    raw: bool,
) -> Result<Inputs<'a>> {
    let active = aug.is_some_and(|a| a.enable);
    if !active {
        return Ok(Inputs::Borrowed(if raw { corpus.clean_raw()? } else { corpus.clean_features()? }));
    }
    let mut out = Vec::with_capacity(corpus.len());
    for s in 0..corpus.len() {
        let rows = match part {
            Partition::Train => &corpus.split(s).train,
            Partition::Test => &corpus.split(s).test,
        };
        out.push(if raw {
            corpus.raw_with(s, rows, draw, aug)?
        } else {
            corpus.features_with(s, rows, draw, aug)?
        });
    }
    Ok(Inputs::Owned(out))
}

fn check_corpus(corpus: &Corpus, cfg: &TrainConfig, aug: Option<&AugmentConfig>) -> Result<()> {
    cfg.validate()?;
    if let Some(a) = aug {
        a.validate()?;
    }
    ensure!(!corpus.is_empty(), "corpus has no scenarios");
    Ok(())
}

/// Losses of one batch; the model is updated when `update` is set.
struct StepLoss {
    triplet: f64,
    supervised: f64,
}

fn triplet_step(
    model: &mut Model,
    heads: &mut [AuxHead],
    inputs: &Inputs<'_>,
    corpus: &Corpus,
    triplets: &[Triplet],
    cfg: &TrainConfig,
    update: bool,
) -> Result<StepLoss> {
    let fwd = |m: &Model, r: SampleRef| m.forward_cached(inputs.get(r.scenario).row(r.index));
    let n = triplets.len();
    let mut emb: [Vec<Vec<f64>>; 3] = Default::default();
    let mut caches: [Vec<ForwardCache<f64>>; 3] = Default::default();
    for t in triplets {
        for (k, r) in [t.anchor, t.close, t.far].into_iter().enumerate() {
            let (y, c) = fwd(model, r)?;
            emb[k].push(y);
            caches[k].push(c);
        }
    }
    let tl = triplet_loss(&emb[0], &emb[1], &emb[2], cfg.margin)?;
    let w = if heads.is_empty() { 1.0 } else { cfg.triplet_weight };
    let mut anchor_grad: Vec<Vec<f64>> = tl.grad_anchor.iter().map(|g| g.iter().map(|v| v * w).collect()).collect();

    let mut supervised = 0.0;
    for head in heads.iter_mut() {
        let rows: Vec<usize> = (0..n).filter(|&i| triplets[i].anchor.scenario == head.scenario).collect();
        if rows.is_empty() {
            continue;
        }
        let mut preds = Vec::with_capacity(rows.len());
        let mut hcache = Vec::with_capacity(rows.len());
        let mut target = Vec::with_capacity(rows.len());
        for &i in &rows {
            let (y, c) = head.model.forward_cached(&emb[0][i])?;
            preds.push(y.iter().zip(&head.scale).zip(&head.shift).map(|((v, s), m)| v * s + m).collect());
            hcache.push(c);
            target.push(corpus.scenario(head.scenario).positions[triplets[i].anchor.index].to_vec());
        }
        let lg = mse_loss(&preds, &target)?;
        supervised += lg.loss;
        if update {
            let mut hg = Gradients::zeros(head.model.spec());
            for ((&i, c), g) in rows.iter().zip(&hcache).zip(&lg.grad) {
                let gy: Vec<f64> = g.iter().zip(&head.scale).map(|(a, s)| a * s).collect();
                let gin = head.model.backward_into(c, &gy, &mut hg, true)?.expect("requested");
                anchor_grad[i].iter_mut().zip(&gin).for_each(|(a, b)| *a += b);
            }
            if !hg.is_finite() {
                return Err(Error::Numeric("non-finite auxiliary head gradient".into()));
            }
            head.model.adam_step(&hg, &cfg.adam)?;
        }
    }
    let out = StepLoss { triplet: tl.loss, supervised };
    if !(out.triplet.is_finite() && out.supervised.is_finite()) {
        return Err(Error::Numeric("embedding loss is not finite".into()));
    }
    if update {
        let mut grads = Gradients::zeros(model.spec());
        for i in 0..n {
            model.backward_into(&caches[0][i], &anchor_grad[i], &mut grads, false)?;
            if w > 0.0 && tl.grad_close[i].iter().any(|&v| v != 0.0) {
                let gc: Vec<f64> = tl.grad_close[i].iter().map(|v| v * w).collect();
                let gf: Vec<f64> = tl.grad_far[i].iter().map(|v| v * w).collect();
                model.backward_into(&caches[1][i], &gc, &mut grads, false)?;
                model.backward_into(&caches[2][i], &gf, &mut grads, false)?;
            }
        }
        if !grads.is_finite() {
            return Err(Error::Numeric("non-finite embedding gradient".into()));
        }
        model.adam_step(&grads, &cfg.adam)?;
    }
    Ok(out)
}

fn draw_triplets(sampler: &TripletSampler, key: &[u64], size: usize) -> Result<Vec<Triplet>> {
    let mut rng = stream(key);
    let anchors = sampler.build_batch(size, &mut rng)?;
    anchors.into_iter().map(|a| sampler.sample_triplet(a, &mut rng)).collect()
}

fn run_triplet_training(
    corpus: &Corpus,
    cfg: &TrainConfig,
    aug: Option<&AugmentConfig>,
    heads: &mut [AuxHead],
) -> Result<EmbeddingRun> {
    let train = TripletSampler::from_corpus(corpus, Partition::Train)?;
    let test = TripletSampler::from_corpus(corpus, Partition::Test)?;
    let skipped_anchors = train.skipped_anchors().iter().map(|s| s.len()).sum();
    let spec = embedding_spec(corpus.feature_dim(), cfg)?;
    let mut model = MlpModel::glorot(&spec, cfg.seed);
    let test_inputs = augmented_inputs(corpus, Partition::Test, Draw::Frozen, aug, false)?;
    let test_batches: Vec<Vec<Triplet>> = (0..cfg.n_test_batches)
        .map(|b| draw_triplets(&test, &[cfg.seed, tag::TEST_BATCH, b as u64], cfg.batch_size))
        .collect::<Result<_>>()?;
    let mut log = Vec::with_capacity(cfg.epochs * cfg.n_train_batches);
    let total = |l: &StepLoss, has_heads: bool| {
        if has_heads {
            cfg.triplet_weight * l.triplet + l.supervised
        } else {
            l.triplet
        }
    };
    for epoch in 0..cfg.epochs {
        let inputs = augmented_inputs(corpus, Partition::Train, Draw::Epoch(epoch as u64), aug, false)?;
        for b in 0..cfg.n_train_batches {
            let trips = draw_triplets(&train, &[cfg.seed, tag::BATCH, epoch as u64, b as u64], cfg.batch_size)?;
            let l = triplet_step(&mut model, heads, &inputs, corpus, &trips, cfg, true)?;
            log.push(TrainLogRow {
                epoch,
                batch: b,
                phase: LogPhase::Train,
                triplet: l.triplet,
                supervised: l.supervised,
                reconstruction: 0.0,
                total: total(&l, !heads.is_empty()),
            });
        }
        if cfg.evaluates_after(epoch) {
            for (b, trips) in test_batches.iter().enumerate() {
                let l = triplet_step(&mut model, heads, &test_inputs, corpus, trips, cfg, false)?;
                log.push(TrainLogRow {
                    epoch,
                    batch: b,
                    phase: LogPhase::Test,
                    triplet: l.triplet,
                    supervised: l.supervised,
                    reconstruction: 0.0,
                    total: total(&l, !heads.is_empty()),
                });
            }
        }
    }
    Ok(EmbeddingRun { model, log, skipped_anchors })
}

/// Triplet-loss embedding `{D, 32, D′}` trained across all scenarios of
/// `corpus`. With `aug`, training inputs are redrawn every epoch.
pub fn train_csi2vec(corpus: &Corpus, cfg: &TrainConfig, aug: Option<&AugmentConfig>) -> Result<EmbeddingRun> {
    check_corpus(corpus, cfg, aug)?;
    run_triplet_training(corpus, cfg, aug, &mut [])
}

/// Joint triplet and positioning training: for every scenario listed in
/// `cfg.semi_scenarios` an auxiliary head maps the anchor embedding to its
/// position and its MSE (in meters) is added to the weighted triplet loss.
pub fn train_csi2vec_semi(corpus: &Corpus, cfg: &TrainConfig, aug: Option<&AugmentConfig>) -> Result<SemiRun> {
    check_corpus(corpus, cfg, aug)?;
    if cfg.semi_scenarios.is_empty() {
        return Err(Error::Config("semi-supervised training needs at least one supervised scenario".into()));
    }
    let mut heads = Vec::new();
    for (k, &id) in cfg.semi_scenarios.iter().enumerate() {
        let s = corpus
            .index_of(id)
            .ok_or_else(|| Error::Config(format!("supervised scenario {id} is not in the corpus")))?;
        let pos = corpus.positions(s, &corpus.split(s).train);
        ensure!(pos.rows() > 0, "scenario {id} has no training samples");
        let (mut mean, mut var) = ([0.0; 2], [0.0; 2]);
        let n = pos.rows() as f64;
        for r in pos.iter_rows() {
            for j in 0..2 {
                mean[j] += r[j] / n;
            }
        }
        for r in pos.iter_rows() {
            for j in 0..2 {
                var[j] += (r[j] - mean[j]).powi(2) / n;
            }
        }
        let scale = var.iter().map(|&v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        let widths: Vec<usize> = std::iter::once(cfg.embed_dim).chain(HEAD_HIDDEN).chain([2]).collect();
        let model = MlpModel::glorot(&MlpSpec::new(widths)?, cfg.seed ^ (0x5e31 + k as u64));
        heads.push(AuxHead { scenario: s, scenario_id: id, model, scale, shift: mean.to_vec() });
    }
    let run = run_triplet_training(corpus, cfg, aug, &mut heads)?;
    let heads = heads
        .into_iter()
        .map(|mut h| {
            h.model.fold_output_affine(&h.scale, &h.shift)?;
            Ok((h.scenario_id, h.model))
        })
        .collect::<Result<_>>()?;
    Ok(SemiRun { run, heads })
}

/// Embeddings of every row of `inputs`.
pub fn embed(model: &Model, inputs: &Matrix) -> Result<Matrix> {
    predict_batch(model, inputs)
}

/// Mean embedding distances over held-out triplets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Separation {
    pub close: f64,
    /// Far partners from the anchor's own scenario.
    pub far_within: f64,
    /// Far partners from other scenarios.
    pub far_across: f64,
}

/// Measures [`Separation`] on the held-out batches of `cfg`, using clean
/// features.
pub fn separation(model: &Model, corpus: &Corpus, cfg: &TrainConfig) -> Result<Separation> {
    let test = TripletSampler::from_corpus(corpus, Partition::Test)?;
    let feats = corpus.clean_features()?;
    let e = |r: SampleRef| model.forward(feats[r.scenario].row(r.index));
    let (mut c, mut fw, mut fa) = ((0.0, 0usize), (0.0, 0usize), (0.0, 0usize));
    for b in 0..cfg.n_test_batches.max(1) {
        for t in draw_triplets(&test, &[cfg.seed, tag::TEST_BATCH, b as u64], cfg.batch_size)? {
            let a = e(t.anchor)?;
            c.0 += euclidean(&a, &e(t.close)?);
            c.1 += 1;
            let d = euclidean(&a, &e(t.far)?);
            let slot = if t.far.scenario == t.anchor.scenario { &mut fw } else { &mut fa };
            slot.0 += d;
            slot.1 += 1;
        }
    }
    let mean = |(s, k): (f64, usize)| if k == 0 { f64::NAN } else { s / k as f64 };
    Ok(Separation { close: mean(c), far_within: mean(fw), far_across: mean(fa) })
}
