//! Output bookkeeping: every file written under the output directory gets
//! a manifest entry, and finished stages are remembered by a key derived
//! from their inputs so reruns can skip them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chartlab_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub command: String,
    pub config_hash: String,
    pub stage: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<Entry>,
    /// Stage name to the key of its inputs when it last completed.
    pub stages: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(root: &Path) -> Result<Self> {
        let p = root.join(MANIFEST_FILE);
        if !p.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&p)?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", p.display())))
    }

    pub fn entry(&self, path: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.path == path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// The output directory plus its manifest, tagged with the command and
/// config currently writing to it.
pub struct Workspace {
    root: PathBuf,
    manifest: Manifest,
    command: String,
    config_hash: String,
}

impl Workspace {
    pub fn open(root: &Path, config_hash: &str) -> Result<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", root.display()))))?;
        Ok(Workspace {
            root: root.to_path_buf(),
            manifest: Manifest::load(root)?,
            command: String::new(),
            config_hash: config_hash.to_string(),
        })
    }

    pub fn set_command(&mut self, command: &str) {
        self.command = command.to_string();
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// A stage is done when it finished with the same key and all of its
    /// files are still on disk with the recorded content.
    pub fn is_done(&self, stage: &str, key: &str) -> bool {
        if self.manifest.stages.get(stage).map(String::as_str) != Some(key) {
            return false;
        }
        let mut any = false;
        for e in self.manifest.entries.iter().filter(|e| e.stage == stage) {
            any = true;
            match std::fs::read(self.path(&e.path)) {
                Ok(bytes) if sha256_hex(&bytes) == e.sha256 => {}
                _ => return false,
            }
        }
        any
    }

    /// Forgets a stage's previous outputs before it is rerun.
    pub fn begin(&mut self, stage: &str) {
        self.manifest.stages.remove(stage);
        self.manifest.entries.retain(|e| e.stage != stage);
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8], stage: &str) -> Result<()> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&p, bytes)?;
        self.record(rel, stage)
    }

    /// Adds (or replaces) the entry of a file already on disk.
    pub fn record(&mut self, rel: &str, stage: &str) -> Result<()> {
        let bytes = std::fs::read(self.path(rel))?;
        let entry = Entry {
            path: rel.to_string(),
            sha256: sha256_hex(&bytes),
            command: self.command.clone(),
            config_hash: self.config_hash.clone(),
            stage: stage.to_string(),
        };
        match self.manifest.entries.binary_search_by(|e| e.path.as_str().cmp(rel)) {
            Ok(i) => self.manifest.entries[i] = entry,
            Err(i) => self.manifest.entries.insert(i, entry),
        }
        Ok(())
    }

    /// Marks a stage complete and persists the manifest.
    pub fn finish(&mut self, stage: &str, key: &str) -> Result<()> {
        self.manifest.stages.insert(stage.to_string(), key.to_string());
        self.save()
    }

    pub fn save(&self) -> Result<()> {
        let tmp = self.root.join(format!("{MANIFEST_FILE}.tmp"));
        std::fs::write(&tmp, self.manifest.to_json())?;
        std::fs::rename(&tmp, self.root.join(MANIFEST_FILE))?;
        Ok(())
    }
}
