//! Output layout and the run manifest.
//!
//! Every stage writes under the configured output directory and records
//! itself in `manifest.json`. The manifest carries the config hash so later
//! stages refuse artifacts produced by a different experiment. Nothing here
//! is time-stamped: identical runs produce identical bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use driftsig_core::io;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub crate_version: String,
    pub config_hash: String,
    pub root_seed: u64,
    pub bank_version: String,
    /// Stage name -> short description of what was written.
    pub stages: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: &Path) -> OutputLayout {
        OutputLayout { root: root.to_path_buf() }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn raw_dir(&self) -> PathBuf {
        self.root.join("raw")
    }

    pub fn features_dir(&self) -> PathBuf {
        self.root.join("features")
    }

    pub fn protocol_dir(&self, subject_id: &str) -> PathBuf {
        self.root.join("protocol").join(subject_id)
    }

    pub fn sweep_csv(&self) -> PathBuf {
        self.root.join("sweep").join("sweep.csv")
    }

    pub fn incremental_dir(&self) -> PathBuf {
        self.root.join("incremental")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn ensure_dir(&self, path: &Path) -> Result<()> {
        std::fs::create_dir_all(path)?;
        Ok(())
    }

    /// Record a completed stage, creating or updating the manifest.
    pub fn record_stage(
        &self,
        cfg: &ExperimentConfig,
        bank_version: &str,
        stage: &str,
        note: &str,
    ) -> Result<()> {
        self.ensure_dir(&self.root)?;
        let mut manifest = match self.load_manifest() {
            Ok(m) => m,
            Err(_) => Manifest {
                manifest_version: MANIFEST_VERSION,
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: cfg.config_hash(),
                root_seed: cfg.seed,
                bank_version: bank_version.to_string(),
                stages: BTreeMap::new(),
            },
        };
        manifest.stages.insert(stage.to_string(), note.to_string());
        io::write_json(&self.manifest_path(), &manifest)?;
        Ok(())
    }

    pub fn load_manifest(&self) -> Result<Manifest> {
        if !self.manifest_path().exists() {
            return Err(HarnessError::State(format!(
                "no manifest at {}; run `protocol` first",
                self.manifest_path().display()
            )));
        }
        Ok(io::read_json(&self.manifest_path())?)
    }

    /// Later stages call this to refuse artifacts from a different config.
    pub fn check_manifest(&self, cfg: &ExperimentConfig, stage_needed: &str) -> Result<Manifest> {
        let manifest = self.load_manifest()?;
        if manifest.config_hash != cfg.config_hash() {
            return Err(HarnessError::State(format!(
                "artifacts in {} were produced by a different config (hash {} != {})",
                self.root.display(),
                manifest.config_hash,
                cfg.config_hash()
            )));
        }
        if !manifest.stages.contains_key(stage_needed) {
            return Err(HarnessError::State(format!(
                "stage {stage_needed:?} has not run in {}",
                self.root.display()
            )));
        }
        Ok(manifest)
    }
}
