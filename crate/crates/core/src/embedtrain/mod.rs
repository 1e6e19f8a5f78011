//! Cross-scenario embedding training: triplet sampling, the CSI2Vec
//! trainers (plain, augmented, semi-supervised) and the autoencoder
//! baseline.

mod autoencoder;
mod corpus;
mod log;
mod sampler;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::AdamConfig;

pub use autoencoder::{train_autoencoder, AutoencoderRun};
pub use corpus::{Corpus, CorpusConfig, Draw, Split};
pub use log::{write_log_csv, LogPhase, TrainLogRow, LOG_CSV_HEADER};
pub use sampler::{Partition, SampleRef, Triplet, TripletSampler};
pub use train::{embed, separation, train_csi2vec, train_csi2vec_semi, EmbeddingRun, SemiRun, Separation};

/// Embedding-training settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Output width `D′` of the embedding.
    pub embed_dim: usize,
    /// Triplet margin.
    pub margin: f64,
    pub n_train_batches: usize,
    pub n_test_batches: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Scenario ids whose positions feed the semi-supervised loss.
    pub semi_scenarios: Vec<u32>,
    /// Weight of the triplet term in the semi-supervised loss.
    pub triplet_weight: f64,
    /// Evaluate the held-out batches every this many epochs; 0 means only
    /// after the first and the last epoch.
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embed_dim: 16,
            margin: 10.0,
            n_train_batches: 240,
            n_test_batches: 120,
            batch_size: 100,
            epochs: 100,
            adam: AdamConfig::default(),
            semi_scenarios: Vec::new(),
            triplet_weight: 1.0,
            eval_every: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.embed_dim == 0 {
            return bad("train.embed_dim must be positive");
        }
        if self.batch_size < 2 {
            return bad("train.batch_size must be at least 2");
        }
        if self.epochs == 0 || self.n_train_batches == 0 {
            return bad("train.epochs and train.n_train_batches must be positive");
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad("train.margin must be a nonnegative number");
        }
        if !(self.triplet_weight >= 0.0 && self.triplet_weight.is_finite()) {
            return bad("train.triplet_weight must be a nonnegative number");
        }
        self.adam.validate()
    }

    /// Hidden width of the embedding and autoencoder networks.
    pub fn hidden_width(&self) -> usize {
        if self.embed_dim >= 64 {
            128
        } else {
            32
        }
    }

    fn evaluates_after(&self, epoch: usize) -> bool {
        epoch == 0
            || epoch + 1 == self.epochs
            || (self.eval_every > 0 && (epoch + 1) % self.eval_every == 0)
    }
}
