//! The per-subject fingerprinting protocol: clean model with a 95/5 label
//! mix, worst-case model per scenario at full corruption, relevance diffs,
//! signature selection and threshold calibration. All artifacts persist
//! under `protocol/<subject>/`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use driftsig_core::bagged_trees::{
    mean_profile, predictor_importance, train, BaggedTreeModel, RelevanceProfile,
};
use driftsig_core::drift_lab::{clean_label_mix, corrupt_labels};
use driftsig_core::fingerprint::{
    calibrate_thresholds, select_signatures, CalibrationConfig, CalibrationReport,
    DriftSignature, DroppedScenario, SignatureSelection,
};
use driftsig_core::io::{self, SignatureFileEntry};
use driftsig_core::seed;
use driftsig_core::types::FeatureMatrix;

use crate::artifacts::OutputLayout;
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::pipeline::{salts, DataBundle, SubjectData};

#[derive(Debug, Clone)]
pub struct SubjectProtocol {
    pub subject_id: String,
    pub clean_model: BaggedTreeModel,
    /// Replica-averaged clean reference profile.
    pub clean_profile: RelevanceProfile,
    pub worst_models: BTreeMap<String, BaggedTreeModel>,
    pub worst_profiles: BTreeMap<String, RelevanceProfile>,
    pub selection: SignatureSelection,
    pub calibration: CalibrationReport,
}

/// On-disk signature document, 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureFile {
    pub subject_id: String,
    pub dimension: usize,
    pub signatures: Vec<SignatureFileEntry>,
    pub dropped: Vec<DroppedScenario>,
}

/// Train the clean anchor: replica 0's model plus the replica-averaged
/// profile.
fn clean_anchor(
    pool: &FeatureMatrix,
    cfg: &ExperimentConfig,
    subject_index: u64,
) -> Result<(BaggedTreeModel, RelevanceProfile)> {
    let mut model0 = None;
    let mut profiles = Vec::with_capacity(cfg.anchor_replicas);
    for r in 0..cfg.anchor_replicas as u64 {
        let mixed = clean_label_mix(
            pool,
            seed::mix_path(cfg.seed, &[salts::CLEAN_MIX, subject_index, r]),
        )?;
        let model = train(
            &mixed,
            &cfg.train,
            seed::mix_path(cfg.seed, &[salts::CLEAN_TRAIN, subject_index, r]),
        )?;
        profiles.push(predictor_importance(&model));
        if r == 0 {
            model0 = Some(model);
        }
    }
    Ok((model0.expect("at least one replica"), mean_profile(&profiles)?))
}

fn worst_case_anchor(
    pool: &FeatureMatrix,
    cfg: &ExperimentConfig,
    scenario: &driftsig_core::drift_lab::DriftScenario,
    subject_index: u64,
    scenario_index: u64,
) -> Result<(BaggedTreeModel, RelevanceProfile)> {
    let mut model0 = None;
    let mut profiles = Vec::with_capacity(cfg.anchor_replicas);
    for r in 0..cfg.anchor_replicas as u64 {
        let corrupted = corrupt_labels(
            pool,
            &driftsig_core::drift_lab::DriftScenario {
                ratio: 1.0,
                seed: seed::mix_path(
                    cfg.seed,
                    &[salts::WORST_CORRUPT, subject_index, scenario_index, r],
                ),
                ..scenario.clone()
            },
        )?;
        let model = train(
            &corrupted,
            &cfg.train,
            seed::mix_path(cfg.seed, &[salts::WORST_TRAIN, subject_index, scenario_index, r]),
        )?;
        profiles.push(predictor_importance(&model));
        if r == 0 {
            model0 = Some(model);
        }
    }
    Ok((model0.expect("at least one replica"), mean_profile(&profiles)?))
}

fn run_subject(
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
    subject: &SubjectData,
    subject_index: u64,
) -> Result<SubjectProtocol> {
    let pool = subject.split.train_pool()?;
    let scenarios = cfg.resolve_scenarios(&bundle.activity_names)?;

    let (clean_model, clean_profile) = clean_anchor(&pool, cfg, subject_index)?;

    let mut worst_models = BTreeMap::new();
    let mut worst_profiles = BTreeMap::new();
    for (si, scenario) in scenarios.iter().enumerate() {
        let (model, profile) =
            worst_case_anchor(&pool, cfg, scenario, subject_index, si as u64)?;
        worst_models.insert(scenario.id.clone(), model);
        worst_profiles.insert(scenario.id.clone(), profile);
    }

    let mut selection =
        select_signatures(&clean_profile, &worst_profiles, &cfg.selection.to_core())?;

    let calibration = calibrate_thresholds(
        &pool,
        &clean_profile,
        &mut selection.signatures,
        &cfg.train,
        &CalibrationConfig {
            n_replicas: cfg.calibration.n_replicas,
            replica_rows: None,
            seed: seed::mix_path(cfg.seed, &[salts::CALIBRATE, subject_index]),
            pin_replica_seeds: None,
        },
    )?;

    Ok(SubjectProtocol {
        subject_id: subject.subject_id.clone(),
        clean_model,
        clean_profile,
        worst_models,
        worst_profiles,
        selection,
        calibration,
    })
}

/// Run the protocol for every subject (parallel across subjects,
/// deterministic order).
pub fn run_protocol(cfg: &ExperimentConfig, bundle: &DataBundle) -> Result<Vec<SubjectProtocol>> {
    bundle
        .subjects
        .par_iter()
        .enumerate()
        .map(|(idx, subject)| run_subject(cfg, bundle, subject, idx as u64))
        .collect()
}

pub fn persist_protocol(
    layout: &OutputLayout,
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
    outputs: &[SubjectProtocol],
) -> Result<()> {
    for out in outputs {
        let dir = layout.protocol_dir(&out.subject_id);
        layout.ensure_dir(&dir)?;
        io::write_json(&dir.join("clean_model.json"), &out.clean_model)?;
        io::write_json(&dir.join("clean_profile.json"), &out.clean_profile)?;
        for (id, model) in &out.worst_models {
            io::write_json(&dir.join(format!("worst_{id}_model.json")), model)?;
        }
        for (id, profile) in &out.worst_profiles {
            io::write_json(&dir.join(format!("worst_{id}_profile.json")), profile)?;
        }
        io::write_json(&dir.join("diffs.json"), &out.selection.diffs)?;
        io::write_json(&dir.join("calibration.json"), &out.calibration)?;
        let sig_file = SignatureFile {
            subject_id: out.subject_id.clone(),
            dimension: bundle.dimension(),
            signatures: out
                .selection
                .signatures
                .iter()
                .map(SignatureFileEntry::from_signature)
                .collect(),
            dropped: out.selection.dropped.clone(),
        };
        io::write_json(&dir.join("signatures.json"), &sig_file)?;
    }
    layout.record_stage(
        cfg,
        &bundle.bank_version,
        "protocol",
        &format!("{} subjects", outputs.len()),
    )?;
    Ok(())
}

/// What sweep/incremental need back from disk.
#[derive(Debug, Clone)]
pub struct LoadedProtocol {
    pub subject_id: String,
    pub clean_profile: RelevanceProfile,
    pub signatures: Vec<DriftSignature>,
}

pub fn load_protocol(
    layout: &OutputLayout,
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
) -> Result<Vec<LoadedProtocol>> {
    layout.check_manifest(cfg, "protocol")?;
    let mut loaded = Vec::with_capacity(bundle.subjects.len());
    for subject in &bundle.subjects {
        let dir = layout.protocol_dir(&subject.subject_id);
        if !dir.exists() {
            return Err(HarnessError::State(format!(
                "missing protocol artifacts for subject {} in {}",
                subject.subject_id,
                dir.display()
            )));
        }
        let clean_profile: RelevanceProfile = io::read_json(&dir.join("clean_profile.json"))?;
        let sig_file: SignatureFile = io::read_json(&dir.join("signatures.json"))?;
        let signatures = sig_file
            .signatures
            .iter()
            .map(|e| e.to_signature(bundle.dimension()))
            .collect::<driftsig_core::Result<Vec<_>>>()?;
        loaded.push(LoadedProtocol {
            subject_id: subject.subject_id.clone(),
            clean_profile,
            signatures,
        });
    }
    Ok(loaded)
}
