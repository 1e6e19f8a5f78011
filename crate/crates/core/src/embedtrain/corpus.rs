use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::RealMatrix;
use crate::preprocess::{augment, zero_pad, AugmentConfig, FeatureExtractor, MaxDims};
use crate::rng::{stream, tag};
use crate::scenegen::ScenarioData;
use crate::Matrix;

/// Feature-extraction and partitioning settings for a [`Corpus`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Delay taps kept after the IDFT.
    pub c_trunc: usize,
    /// Length of the contiguous sample blocks used for the split.
    pub split_block: usize,
    /// Every `test_every`-th block is held out (5 gives an 80/20 split).
    pub test_every: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { c_trunc: 16, split_block: 20, test_every: 5 }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c_trunc == 0 || self.split_block == 0 || self.test_every < 2 {
            return Err(Error::Config(
                "corpus needs c_trunc >= 1, split_block >= 1 and test_every >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Disjoint training and test sample indices of one scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Cuts `0..n` into blocks of `block` consecutive samples and holds out
    /// every `every`-th block (the last block of each group).
    pub fn blocks(n: usize, block: usize, every: usize) -> Self {
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for i in 0..n {
            if (i / block) % every == every - 1 {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        Split { train, test }
    }
}

/// Which augmentation draw a feature matrix uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Draw {
    Clean,
    /// Redrawn once per training epoch.
    Epoch(u64),
    /// The single frozen draw used for held-out evaluation.
    Frozen,
}

impl Draw {
    fn key(self) -> u64 {
        match self {
            Draw::Clean => unreachable!("clean draws take no randomness"),
            Draw::Epoch(e) => e,
            Draw::Frozen => u64::MAX,
        }
    }
}

/// Scenarios plus their shared preprocessing: padding dims, the delay
/// transform, partitions, and cached unaugmented inputs.
#[derive(Debug)]
pub struct Corpus {
    scenarios: Vec<ScenarioData>,
    extractor: FeatureExtractor,
    splits: Vec<Split>,
    features: OnceLock<Vec<Matrix>>,
    raw: OnceLock<Vec<Matrix>>,
}

#[derive(Clone, Copy)]
enum Kind {
    Features,
    Raw,
}

impl Corpus {
    pub fn new(scenarios: Vec<ScenarioData>, cfg: &CorpusConfig) -> Result<Self> {
        cfg.validate()?;
        if scenarios.is_empty() {
            return Err(Error::Config("corpus needs at least one scenario".into()));
        }
        for s in &scenarios {
            s.validate()?;
        }
        let max_dims = MaxDims::from_specs(scenarios.iter().map(|s| &s.spec))?;
        let extractor = FeatureExtractor::new(max_dims, cfg.c_trunc)?;
        let splits = scenarios.iter().map(|s| Split::blocks(s.len(), cfg.split_block, cfg.test_every)).collect();
        Ok(Corpus { scenarios, extractor, splits, features: OnceLock::new(), raw: OnceLock::new() })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn scenarios(&self) -> &[ScenarioData] {
        &self.scenarios
    }

    pub fn scenario(&self, s: usize) -> &ScenarioData {
        &self.scenarios[s]
    }

    /// Position of the scenario with this id.
    pub fn index_of(&self, scenario_id: u32) -> Option<usize> {
        self.scenarios.iter().position(|s| s.spec.scenario_id == scenario_id)
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    pub fn max_dims(&self) -> MaxDims {
        self.extractor.max_dims()
    }

    pub fn split(&self, s: usize) -> &Split {
        &self.splits[s]
    }

    pub fn feature_dim(&self) -> usize {
        self.extractor.feature_dim()
    }

    pub fn raw_dim(&self) -> usize {
        self.extractor.raw_dim()
    }

    /// Unaugmented features of every sample of every scenario (cached).
    pub fn clean_features(&self) -> Result<&[Matrix]> {
        cached(&self.features, || (0..self.len()).map(|s| self.compute(s, None, Kind::Features)).collect()).map(Vec::as_slice)
    }

    /// Unaugmented raw vectors (cached).
    pub fn clean_raw(&self) -> Result<&[Matrix]> {
        cached(&self.raw, || (0..self.len()).map(|s| self.compute(s, None, Kind::Raw)).collect()).map(Vec::as_slice)
    }

    /// Features of all samples of scenario `s`; rows listed in `rows` use
    /// the requested augmentation draw, the others stay clean.
    pub fn features_with(&self, s: usize, rows: &[usize], draw: Draw, aug: Option<&AugmentConfig>) -> Result<Matrix> {
        self.with_draw(s, rows, draw, aug, Kind::Features)
    }

    pub fn raw_with(&self, s: usize, rows: &[usize], draw: Draw, aug: Option<&AugmentConfig>) -> Result<Matrix> {
        self.with_draw(s, rows, draw, aug, Kind::Raw)
    }

    fn with_draw(&self, s: usize, rows: &[usize], draw: Draw, aug: Option<&AugmentConfig>, kind: Kind) -> Result<Matrix> {
        let clean = match kind {
            Kind::Features => &self.clean_features()?[s],
            Kind::Raw => &self.clean_raw()?[s],
        };
        let aug = match (draw, aug) {
            (Draw::Clean, _) | (_, None) => return Ok(clean.clone()),
            (_, Some(a)) if !a.enable => return Ok(clean.clone()),
            (_, Some(a)) => a,
        };
        let mut out = clean.clone();
        let data = &self.scenarios[s];
        for &n in rows {
            let key = [aug.seed, tag::AUGMENT, data.spec.scenario_id as u64, n as u64, draw.key()];
            let v = self.one(s, n, Some((aug, key)), kind)?;
            out.row_mut(n).copy_from_slice(&v);
        }
        Ok(out)
    }

    fn one(&self, s: usize, n: usize, aug: Option<(&AugmentConfig, [u64; 5])>, kind: Kind) -> Result<Vec<f64>> {
        let mut p = zero_pad(&self.scenarios[s].csi[n], &self.max_dims())?;
        if let Some((cfg, key)) = aug {
            p = augment(p, cfg, &mut stream(&key))?;
        }
        match kind {
            Kind::Features => self.extractor.features(&p),
            Kind::Raw => self.extractor.raw(&p),
        }
    }

    fn compute(&self, s: usize, aug: Option<(&AugmentConfig, [u64; 5])>, kind: Kind) -> Result<Matrix> {
        let n = self.scenarios[s].len();
        let width = match kind {
            Kind::Features => self.feature_dim(),
            Kind::Raw => self.raw_dim(),
        };
        let mut out = RealMatrix::zeros(n, width);
        for i in 0..n {
            out.row_mut(i).copy_from_slice(&self.one(s, i, aug, kind)?);
        }
        Ok(out)
    }

    /// Ground-truth positions of the given samples as an N×2 matrix.
    pub fn positions(&self, s: usize, rows: &[usize]) -> Matrix {
        let p = &self.scenarios[s].positions;
        let mut out = RealMatrix::zeros(rows.len(), 2);
        for (k, &n) in rows.iter().enumerate() {
            out.row_mut(k).copy_from_slice(&p[n]);
        }
        out
    }
}

fn cached<T>(cell: &OnceLock<T>, init: impl FnOnce() -> Result<T>) -> Result<&T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = init()?;
    Ok(cell.get_or_init(|| v))
}
