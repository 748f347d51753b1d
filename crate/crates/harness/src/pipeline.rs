//! Data preparation: load or synthesize recordings, extract windowed
//! features, split each subject three ways, and select features on the
//! pooled training parts.
//!
//! Part 3 (test) rows are holdout-tagged at split time; any later attempt to
//! train on or corrupt them is a hard error. Feature selection sees only
//! parts 1 + 2.

use driftsig_core::drift_lab::{generate_synthetic, split_three_parts, ThreeWaySplit};
use driftsig_core::io::{read_recording_csv, LabelMap};
use driftsig_core::signal_features::{extract_windows, sfs_select};
use driftsig_core::types::{FeatureMatrix, SensorRecording};
use driftsig_core::{seed, Error};

use crate::config::{DataSource, ExperimentConfig};
use crate::error::{HarnessError, Result};

pub mod salts {
    pub const SPLIT: u64 = 0x0051;
    pub const SFS: u64 = 0x005f;
    pub const SYNTH: u64 = 0x0057;
    pub const CLEAN_MIX: u64 = 0x0c11;
    pub const CLEAN_TRAIN: u64 = 0x0c12;
    pub const WORST_CORRUPT: u64 = 0x0c21;
    pub const WORST_TRAIN: u64 = 0x0c22;
    pub const CALIBRATE: u64 = 0x0c31;
    pub const SWEEP_MIX: u64 = 0x0c40;
    pub const SWEEP_CORRUPT: u64 = 0x0c41;
    pub const SWEEP_TRAIN: u64 = 0x0c42;
    pub const LOSO_TRAIN: u64 = 0x0c51;
    pub const CHUNKS: u64 = 0x0c52;
    pub const INJECT: u64 = 0x0c53;
    pub const CHUNK_TRAIN: u64 = 0x0c54;
    pub const REPAIR_TRAIN: u64 = 0x0c55;
    pub const CHUNK_CLEAN_ROWS: u64 = 0x0c61;
    pub const CHUNK_CLEAN_TRAIN: u64 = 0x0c63;
    pub const CHUNK_WORST_ROWS: u64 = 0x0c64;
    pub const CHUNK_WORST_CORRUPT: u64 = 0x0c65;
    pub const CHUNK_WORST_TRAIN: u64 = 0x0c66;
    pub const CHUNK_CAL_ROWS: u64 = 0x0c67;
    pub const CHUNK_CAL_TRAIN: u64 = 0x0c68;
}

#[derive(Debug, Clone)]
pub struct SubjectData {
    pub subject_id: String,
    pub split: ThreeWaySplit,
}

#[derive(Debug, Clone)]
pub struct DataBundle {
    pub activity_names: Vec<String>,
    pub full_feature_names: Vec<String>,
    pub bank_version: String,
    /// 0-based indices into the full bank, in selection order.
    pub selected: Option<Vec<usize>>,
    /// Post-selection feature names.
    pub feature_names: Vec<String>,
    /// Sorted by subject id.
    pub subjects: Vec<SubjectData>,
}

impl DataBundle {
    pub fn subject_ids(&self) -> Vec<String> {
        self.subjects.iter().map(|s| s.subject_id.clone()).collect()
    }

    pub fn dimension(&self) -> usize {
        self.feature_names.len()
    }
}

/// Load or synthesize all subject recordings, sorted by subject id.
pub fn load_recordings(cfg: &ExperimentConfig) -> Result<Vec<SensorRecording>> {
    let mut recordings = match &cfg.data {
        DataSource::Synthetic(synth) => {
            generate_synthetic(synth, seed::mix(cfg.seed, salts::SYNTH))?
        }
        DataSource::CsvDir { dir, label_map } => {
            let map = LabelMap::load(label_map)
                .map_err(|e| HarnessError::Config(format!("label map: {e}")))?;
            let mut paths: Vec<_> = std::fs::read_dir(dir)
                .map_err(|e| HarnessError::Config(format!("data dir {}: {e}", dir.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(HarnessError::Config(format!(
                    "no recording CSVs in {}",
                    dir.display()
                )));
            }
            paths
                .iter()
                .map(|p| read_recording_csv(p, &map))
                .collect::<driftsig_core::Result<Vec<_>>>()?
        }
    };
    recordings.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(recordings)
}

/// Extract one feature matrix per subject with the configured bank.
pub fn extract_all(
    cfg: &ExperimentConfig,
    recordings: &[SensorRecording],
) -> Result<Vec<FeatureMatrix>> {
    recordings
        .iter()
        .map(|rec| extract_windows(rec, &cfg.windowing, &cfg.bank).map_err(HarnessError::from))
        .collect()
}

/// The full preparation pass. Deterministic in (config, seed).
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<DataBundle> {
    cfg.validate()?;
    let recordings = load_recordings(cfg)?;
    let activity_names = recordings[0].activity_names.clone();
    // Scenario bindings must resolve before any training starts.
    cfg.resolve_scenarios(&activity_names)?;

    let matrices = extract_all(cfg, &recordings)?;
    let full_feature_names = matrices[0].feature_names.clone();
    let bank_version = matrices[0].bank_version.clone();

    let mut subjects = Vec::with_capacity(matrices.len());
    for (idx, m) in matrices.iter().enumerate() {
        let split = split_three_parts(m, seed::mix_path(cfg.seed, &[salts::SPLIT, idx as u64]))
            .map_err(|e| match e {
                Error::InsufficientData(msg) => Error::InsufficientData(format!(
                    "subject {}: {msg}",
                    recordings[idx].subject_id
                )),
                other => other,
            })?;
        subjects.push(SubjectData { subject_id: recordings[idx].subject_id.clone(), split });
    }

    let selected = match cfg.sfs.k {
        Some(k) if k < full_feature_names.len() => {
            let pools: Vec<FeatureMatrix> = subjects
                .iter()
                .map(|s| s.split.train_pool())
                .collect::<driftsig_core::Result<_>>()?;
            let pool_refs: Vec<&FeatureMatrix> = pools.iter().collect();
            let pooled = FeatureMatrix::concat(&pool_refs)?;
            let sfs_cfg = cfg.sfs.to_core(k, seed::mix(cfg.seed, salts::SFS));
            Some(sfs_select(&pooled, &sfs_cfg)?)
        }
        _ => None,
    };

    let (subjects, feature_names) = match &selected {
        None => (subjects, full_feature_names.clone()),
        Some(cols) => {
            let mut restricted = Vec::with_capacity(subjects.len());
            for s in subjects {
                restricted.push(SubjectData {
                    subject_id: s.subject_id,
                    split: ThreeWaySplit {
                        train_a: s.split.train_a.select_columns(cols)?,
                        train_b: s.split.train_b.select_columns(cols)?,
                        test: s.split.test.select_columns(cols)?,
                        dropped_per_class: s.split.dropped_per_class,
                    },
                });
            }
            let names = cols.iter().map(|&i| full_feature_names[i].clone()).collect();
            (restricted, names)
        }
    };

    Ok(DataBundle {
        activity_names,
        full_feature_names,
        bank_version,
        selected,
        feature_names,
        subjects,
    })
}
