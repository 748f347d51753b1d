//! Experiment configuration: one JSON document drives every stage.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use driftsig_core::bagged_trees::TrainConfig;
use driftsig_core::drift_lab::{DriftScenario, ScenarioKind, SyntheticConfig};
use driftsig_core::fingerprint::{OverrideSpec, SignatureSelectionConfig};
use driftsig_core::signal_features::{FeatureBank, SfsConfig, WindowingConfig};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Generate recordings from class archetypes.
    Synthetic(SyntheticConfig),
    /// Read one recording CSV per subject from a directory.
    CsvDir { dir: PathBuf, label_map: PathBuf },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioBindingKind {
    UniformNoise {
        #[serde(default)]
        redraw_excludes_original: bool,
    },
    Confusion {
        source: String,
        target: String,
    },
}

/// A drift scenario bound to activity names; resolved against the label map
/// before any training runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBinding {
    pub id: String,
    #[serde(flatten)]
    pub kind: ScenarioBindingKind,
}

impl ScenarioBinding {
    pub fn resolve(&self, activity_names: &[String]) -> Result<DriftScenario> {
        let class_of = |name: &str| -> Result<usize> {
            activity_names.iter().position(|a| a == name).ok_or_else(|| {
                HarnessError::Config(format!(
                    "scenario {}: activity {name:?} not in label map {activity_names:?}",
                    self.id
                ))
            })
        };
        let kind = match &self.kind {
            ScenarioBindingKind::UniformNoise { redraw_excludes_original } => {
                ScenarioKind::UniformNoise {
                    redraw_excludes_original: *redraw_excludes_original,
                }
            }
            ScenarioBindingKind::Confusion { source, target } => ScenarioKind::ClassConfusion {
                source_class: class_of(source)?,
                target_class: class_of(target)?,
            },
        };
        Ok(DriftScenario { id: self.id.clone(), kind, ratio: 0.0, seed: 0 })
    }

    /// Activity names the scenario moves labels between (empty = all).
    pub fn affected_activities(&self) -> Vec<String> {
        match &self.kind {
            ScenarioBindingKind::UniformNoise { .. } => Vec::new(),
            ScenarioBindingKind::Confusion { source, target } => {
                vec![source.clone(), target.clone()]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SfsSettings {
    /// Number of features to keep; `null` skips selection.
    pub k: Option<usize>,
    pub folds: usize,
    pub eval_trees: usize,
    pub eval_max_depth: Option<usize>,
    /// Stratified row subsample for candidate evaluation.
    pub eval_rows: Option<usize>,
}

impl Default for SfsSettings {
    fn default() -> Self {
        SfsSettings {
            k: Some(20),
            folds: 3,
            eval_trees: 8,
            eval_max_depth: Some(8),
            eval_rows: Some(300),
        }
    }
}

impl SfsSettings {
    pub fn to_core(&self, k: usize, seed: u64) -> SfsConfig {
        SfsConfig {
            k,
            folds: self.folds,
            eval_trees: self.eval_trees,
            eval_max_depth: self.eval_max_depth,
            eval_rows: self.eval_rows,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSettings {
    pub n_replicas: usize,
    /// Calibrate the incremental run at chunk scale: thresholds, sign
    /// patterns and the clean reference come from chunk-sized replicas.
    pub chunk_scale: bool,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings { n_replicas: 30, chunk_scale: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InjectionConfig {
    pub scenario_id: String,
    /// First chunk index (0-based) with corrupted self-training labels; the
    /// corruption persists for the rest of the stream.
    pub at_chunk: usize,
    pub ratio: f64,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig { scenario_id: "S2".into(), at_chunk: 1, ratio: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RepairPolicy {
    /// Flagged chunk models are discarded.
    Reject,
    /// Flagged chunk models are retrained with true labels for the explained
    /// classes only (whole chunk when the explanation is unknown).
    #[default]
    Repair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionSettings {
    pub k_per_scenario: Option<usize>,
    pub same_sign_tolerance: f64,
    /// Manual per-scenario feature sets ("all" or 1-based indices).
    pub overrides: BTreeMap<String, OverrideSpec>,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        let d = SignatureSelectionConfig::default();
        SelectionSettings {
            k_per_scenario: d.k_per_scenario,
            same_sign_tolerance: d.same_sign_tolerance,
            overrides: BTreeMap::new(),
        }
    }
}

impl SelectionSettings {
    pub fn to_core(&self) -> SignatureSelectionConfig {
        SignatureSelectionConfig {
            k_per_scenario: self.k_per_scenario,
            same_sign_tolerance: self.same_sign_tolerance,
            overrides: self.overrides.clone(),
        }
    }
}

fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_scenarios() -> Vec<ScenarioBinding> {
    vec![
        ScenarioBinding {
            id: "S1".into(),
            kind: ScenarioBindingKind::UniformNoise { redraw_excludes_original: false },
        },
        ScenarioBinding {
            id: "S2".into(),
            kind: ScenarioBindingKind::Confusion {
                source: "biking".into(),
                target: "walking".into(),
            },
        },
        ScenarioBinding {
            id: "S3".into(),
            kind: ScenarioBindingKind::Confusion {
                source: "upstairs".into(),
                target: "downstairs".into(),
            },
        },
    ]
}

fn default_train() -> TrainConfig {
    // Relevance profiles steady enough for fingerprinting need more trees
    // than the library default.
    TrainConfig { n_trees: 150, ..TrainConfig::default() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub windowing: WindowingConfig,
    pub bank: FeatureBank,
    pub sfs: SfsSettings,
    pub train: TrainConfig,
    pub scenarios: Vec<ScenarioBinding>,
    pub selection: SelectionSettings,
    pub calibration: CalibrationSettings,
    /// Anchor profiles (clean and worst-case) average this many model
    /// replicas.
    pub anchor_replicas: usize,
    pub sweep_grid: Vec<f64>,
    pub chunks_per_subject: usize,
    pub injection: Option<InjectionConfig>,
    pub repair_policy: RepairPolicy,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::default(),
            windowing: WindowingConfig::default(),
            bank: FeatureBank::default(),
            sfs: SfsSettings::default(),
            train: default_train(),
            scenarios: default_scenarios(),
            selection: SelectionSettings::default(),
            calibration: CalibrationSettings::default(),
            anchor_replicas: 5,
            sweep_grid: default_grid(),
            chunks_per_subject: 3,
            injection: Some(InjectionConfig::default()),
            repair_policy: RepairPolicy::default(),
            seed: 42,
            out_dir: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("cannot parse {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Fails fast on anything inconsistent, before any data work.
    pub fn validate(&self) -> Result<()> {
        self.windowing
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.bank
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if let DataSource::Synthetic(s) = &self.data {
            s.validate_for_windowing(&self.windowing)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if self.scenarios.is_empty() {
            return Err(HarnessError::Config("no scenarios configured".into()));
        }
        let mut ids: Vec<&String> = self.scenarios.iter().map(|s| &s.id).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.scenarios.len() {
            return Err(HarnessError::Config("duplicate scenario ids".into()));
        }
        if self.sweep_grid.is_empty()
            || self.sweep_grid.iter().any(|r| !(0.0..=1.0).contains(r))
        {
            return Err(HarnessError::Config(
                "sweep grid must be non-empty within [0, 1]".into(),
            ));
        }
        if self.anchor_replicas == 0 {
            return Err(HarnessError::Config("anchor_replicas must be >= 1".into()));
        }
        if self.chunks_per_subject == 0 {
            return Err(HarnessError::Config("chunks_per_subject must be >= 1".into()));
        }
        if self.calibration.n_replicas < 10 {
            return Err(HarnessError::Config(
                "calibration.n_replicas must be >= 10".into(),
            ));
        }
        if let Some(inj) = &self.injection {
            if !self.scenarios.iter().any(|s| s.id == inj.scenario_id) {
                return Err(HarnessError::Config(format!(
                    "injection references unknown scenario {}",
                    inj.scenario_id
                )));
            }
            if !(0.0..=1.0).contains(&inj.ratio) {
                return Err(HarnessError::Config("injection ratio outside [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// Resolve every scenario against the label map; config error on any
    /// missing activity. Runs before training.
    pub fn resolve_scenarios(&self, activity_names: &[String]) -> Result<Vec<DriftScenario>> {
        self.scenarios.iter().map(|b| b.resolve(activity_names)).collect()
    }

    /// Hash of the experiment identity: everything except execution details
    /// (output directory, thread count).
    pub fn config_hash(&self) -> String {
        let mut identity = self.clone();
        identity.out_dir = PathBuf::new();
        identity.jobs = 0;
        let canonical = serde_json::to_string(&identity).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }
}
