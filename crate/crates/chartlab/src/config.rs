//! Experiment configuration: one versioned JSON document plus dotted-path
//! overrides from the command line.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chartlab_core::chartmetrics::EvalConfig;
use chartlab_core::downstream::HeadConfig;
use chartlab_core::embedtrain::{CorpusConfig, TrainConfig};
use chartlab_core::preprocess::AugmentConfig;
use chartlab_core::scenegen::ScenarioSpec;
use chartlab_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Embedding methods and the end-to-end baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "csi2vec")]
    Csi2Vec,
    #[serde(rename = "csi2vec-aug")]
    Csi2VecAug,
    #[serde(rename = "csi2vec-aug-semi")]
    Csi2VecAugSemi,
    #[serde(rename = "scs-ee")]
    ScsEe,
    #[serde(rename = "ae")]
    Ae,
    #[serde(rename = "ae-aug")]
    AeAug,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Csi2Vec, Method::Csi2VecAug, Method::Csi2VecAugSemi, Method::ScsEe, Method::Ae, Method::AeAug];

    pub fn name(self) -> &'static str {
        match self {
            Method::Csi2Vec => "csi2vec",
            Method::Csi2VecAug => "csi2vec-aug",
            Method::Csi2VecAugSemi => "csi2vec-aug-semi",
            Method::ScsEe => "scs-ee",
            Method::Ae => "ae",
            Method::AeAug => "ae-aug",
        }
    }

    pub fn augmented(self) -> bool {
        matches!(self, Method::Csi2VecAug | Method::Csi2VecAugSemi | Method::AeAug)
    }

    pub fn is_autoencoder(self) -> bool {
        matches!(self, Method::Ae | Method::AeAug)
    }

    /// Whether the method trains a shared embedding (everything but SCS-EE).
    pub fn has_embedding(self) -> bool {
        self != Method::ScsEe
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "pos")]
    Pos,
    #[serde(rename = "cc-sn")]
    CcSn,
    #[serde(rename = "cc-pca")]
    CcPca,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Pos, Task::CcSn, Task::CcPca];

    pub fn name(self) -> &'static str {
        match self {
            Task::Pos => "pos",
            Task::CcSn => "cc-sn",
            Task::CcPca => "cc-pca",
        }
    }

    /// Tasks with a trained network (PCA has none).
    pub fn is_trained(self) -> bool {
        self != Task::CcPca
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a scenario comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioEntry {
    /// One of `outdoor-like`, `indoor-like`, `factory-like`, seeded from
    /// the top-level seed.
    Preset(String),
    Spec(ScenarioSpec),
    /// A serialized scenario container; its JSON sidecar sits next to it.
    Path(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Fixes every random stream of the experiment.
    pub seed: u64,
    pub scenarios: Vec<ScenarioEntry>,
    pub methods: Vec<Method>,
    pub tasks: Vec<Task>,
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    /// Positioning and charting heads on embeddings.
    pub heads: HeadConfig,
    /// The end-to-end baseline.
    pub scs_ee: HeadConfig,
    pub eval: EvalConfig,
    /// `D′` grid of the sweep.
    pub embed_dims: Vec<usize>,
    /// Epochs for the autoencoder baselines, which cost several times more
    /// per epoch than the triplet network and converge much earlier.
    pub autoencoder_epochs: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            scenarios: ["outdoor-like", "indoor-like", "factory-like"]
                .into_iter()
                .map(|p| ScenarioEntry::Preset(p.into()))
                .collect(),
            methods: Method::ALL.to_vec(),
            tasks: Task::ALL.to_vec(),
            corpus: CorpusConfig::default(),
            train: TrainConfig { semi_scenarios: vec![2], ..TrainConfig::default() },
            augment: AugmentConfig::default(),
            heads: HeadConfig { epochs: 1000, ..HeadConfig::default() },
            scs_ee: HeadConfig { epochs: 100, ..HeadConfig::default() },
            eval: EvalConfig::default(),
            embed_dims: vec![2, 4, 8, 16],
            autoencoder_epochs: 20,
            output_dir: PathBuf::from("chartlab-out"),
        }
    }
}

fn config_err(e: impl fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    /// Reads a config file (or the defaults when `path` is `None`), applies
    /// `key=value` overrides and an optional seed, then validates.
    pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => serde_json::to_value(ExperimentConfig::default()).map_err(config_err)?,
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        if let Some(s) = seed {
            doc["seed"] = Value::from(s);
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.scenarios.is_empty() || self.methods.is_empty() || self.tasks.is_empty() {
            return Err(Error::Config("scenarios, methods and tasks must be nonempty".into()));
        }
        let unique = |n: usize, m: usize| n == m;
        if !unique(self.methods.iter().collect::<BTreeSet<_>>().len(), self.methods.len())
            || !unique(self.tasks.iter().collect::<BTreeSet<_>>().len(), self.tasks.len())
        {
            return Err(Error::Config("methods and tasks must not repeat".into()));
        }
        if self.autoencoder_epochs == 0 {
            return Err(Error::Config("autoencoder_epochs must be positive".into()));
        }
        if self.embed_dims.contains(&0) {
            return Err(Error::Config("embed_dims entries must be positive".into()));
        }
        if self.methods.contains(&Method::Csi2VecAugSemi) && self.train.semi_scenarios.is_empty() {
            return Err(Error::Config("csi2vec-aug-semi needs train.semi_scenarios".into()));
        }
        if self.heads.output_dim != 2 || self.scs_ee.output_dim != 2 {
            return Err(Error::Config("charts are two-dimensional; output_dim must be 2".into()));
        }
        self.corpus.validate()?;
        self.train.validate()?;
        self.augment.validate()?;
        self.heads.validate()?;
        self.scs_ee.validate()?;
        self.eval.validate()?;
        for e in &self.scenarios {
            match e {
                ScenarioEntry::Preset(p) => {
                    preset(p, 0)?;
                }
                ScenarioEntry::Spec(s) => s.validate()?,
                ScenarioEntry::Path(_) => {}
            }
        }
        Ok(())
    }

    /// Scenario specs for generated entries (not file-backed ones), with
    /// preset seeds taken from the top-level seed.
    pub fn generated_specs(&self) -> Result<Vec<ScenarioSpec>> {
        let mut out = Vec::new();
        for e in &self.scenarios {
            match e {
                ScenarioEntry::Preset(p) => out.push(preset(p, self.seed)?),
                ScenarioEntry::Spec(s) => out.push(s.clone()),
                ScenarioEntry::Path(_) => {}
            }
        }
        Ok(out)
    }

    /// Copies of the sub-configs with their seeds tied to the top-level seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig { seed: self.seed, ..self.augment.clone() }
    }

    pub fn head_config(&self) -> HeadConfig {
        HeadConfig { seed: self.seed, ..self.heads.clone() }
    }

    pub fn scs_ee_config(&self) -> HeadConfig {
        HeadConfig { seed: self.seed, ..self.scs_ee.clone() }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig { seed: self.seed, ..self.eval.clone() }
    }

    /// SHA-256 of the canonical JSON form, ignoring `output_dir`.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v.as_object_mut().expect("object").remove("output_dir");
        sha256_hex(v.to_string().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn preset(name: &str, seed: u64) -> Result<ScenarioSpec> {
    match name {
        "outdoor-like" => Ok(ScenarioSpec::outdoor_like(seed)),
        "indoor-like" => Ok(ScenarioSpec::indoor_like(seed)),
        "factory-like" => Ok(ScenarioSpec::factory_like(seed)),
        _ => Err(Error::Config(format!("unknown scenario preset {name:?}"))),
    }
}

/// Sets `a.b.c=value` inside a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise. Numeric path segments
/// index arrays.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override path {path:?}")));
    }
    for (k, part) in parts.iter().enumerate() {
        let last = k + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| Error::Config(format!("{part:?} in {path:?} is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(i)
                    .ok_or_else(|| Error::Config(format!("index {i} out of range ({len}) in {path:?}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("{path:?} descends into a non-container value"))),
        };
    }
    unreachable!("loop returns on the last segment")
}
