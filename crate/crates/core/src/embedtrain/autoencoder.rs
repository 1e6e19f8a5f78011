use super::corpus::{Corpus, Draw};
use super::log::{epoch_mean, LogPhase, TrainLogRow};
use super::sampler::{Partition, SampleRef, TripletSampler};
use super::train::{augmented_inputs, Inputs};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::neuralnet::{ae_loss, Gradients, MlpModel, MlpSpec};
use crate::preprocess::AugmentConfig;
use crate::rng::{stream, tag};

type Model = MlpModel<f64>;

#[derive(Clone, Debug)]
pub struct AutoencoderRun {
    /// `{D″, 32, D′}`; its output is the embedding.
    pub encoder: Model,
    pub decoder: Model,
    pub log: Vec<TrainLogRow>,
}

impl AutoencoderRun {
    pub fn train_loss(&self, epoch: usize) -> Option<f64> {
        epoch_mean(&self.log, epoch, LogPhase::Train)
    }
}

fn ae_step(
    enc: &mut Model,
    dec: &mut Model,
    inputs: &Inputs<'_>,
    batch: &[SampleRef],
    cfg: &TrainConfig,
    update: bool,
) -> Result<f64> {
    let mut x = Vec::with_capacity(batch.len());
    let mut recon = Vec::with_capacity(batch.len());
    let mut caches = Vec::with_capacity(batch.len());
    for r in batch {
        let xi = inputs.get(r.scenario).row(r.index);
        let (z, ce) = enc.forward_cached(xi)?;
        let (y, cd) = dec.forward_cached(&z)?;
        x.push(xi.to_vec());
        recon.push(y);
        caches.push((ce, cd));
    }
    let lg = ae_loss(&x, &recon)?;
    if !lg.loss.is_finite() {
        return Err(Error::Numeric("reconstruction loss is not finite".into()));
    }
    if update {
        let mut ge = Gradients::zeros(enc.spec());
        let mut gd = Gradients::zeros(dec.spec());
        for ((ce, cd), g) in caches.iter().zip(&lg.grad) {
            let gz = dec.backward_into(cd, g, &mut gd, true)?.expect("requested");
            enc.backward_into(ce, &gz, &mut ge, false)?;
        }
        if !(ge.is_finite() && gd.is_finite()) {
            return Err(Error::Numeric("non-finite autoencoder gradient".into()));
        }
        enc.adam_step(&ge, &cfg.adam)?;
        dec.adam_step(&gd, &cfg.adam)?;
    }
    Ok(lg.loss)
}

/// Autoencoder on raw delay-domain vectors with the same batch protocol as
/// the embedding (uniform scenario, then uniform sample).
pub fn train_autoencoder(corpus: &Corpus, cfg: &TrainConfig, aug: Option<&AugmentConfig>) -> Result<AutoencoderRun> {
    cfg.validate()?;
    if let Some(a) = aug {
        a.validate()?;
    }
    let d2 = corpus.raw_dim();
    let h = cfg.hidden_width();
    let mut enc = MlpModel::glorot(&MlpSpec::new(vec![d2, h, cfg.embed_dim])?, cfg.seed);
    let mut dec = MlpModel::glorot(&MlpSpec::new(vec![cfg.embed_dim, h, d2])?, cfg.seed ^ 0xdec0);
    let train = TripletSampler::from_corpus(corpus, Partition::Train)?;
    let test = TripletSampler::from_corpus(corpus, Partition::Test)?;
    let test_inputs = augmented_inputs(corpus, Partition::Test, Draw::Frozen, aug, true)?;
    let test_batches: Vec<Vec<SampleRef>> = (0..cfg.n_test_batches)
        .map(|b| test.build_batch(cfg.batch_size, &mut stream(&[cfg.seed, tag::TEST_BATCH, b as u64])))
        .collect::<Result<_>>()?;
    let row = |epoch, batch, phase, loss: f64| TrainLogRow {
        epoch,
        batch,
        phase,
        triplet: 0.0,
        supervised: 0.0,
        reconstruction: loss,
        total: loss,
    };
    let mut log = Vec::new();
    for epoch in 0..cfg.epochs {
        let inputs = augmented_inputs(corpus, Partition::Train, Draw::Epoch(epoch as u64), aug, true)?;
        for b in 0..cfg.n_train_batches {
            let mut rng = stream(&[cfg.seed, tag::BATCH, epoch as u64, b as u64]);
            let batch = train.build_batch(cfg.batch_size, &mut rng)?;
            let loss = ae_step(&mut enc, &mut dec, &inputs, &batch, cfg, true)?;
            log.push(row(epoch, b, LogPhase::Train, loss));
        }
        if cfg.evaluates_after(epoch) {
            for (b, batch) in test_batches.iter().enumerate() {
                let loss = ae_step(&mut enc, &mut dec, &test_inputs, batch, cfg, false)?;
                log.push(row(epoch, b, LogPhase::Test, loss));
            }
        }
    }
    Ok(AutoencoderRun { encoder: enc, decoder: dec, log })
}
