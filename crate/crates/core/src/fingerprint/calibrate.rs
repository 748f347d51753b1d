//! Threshold calibration from clean-replica models.
//!
//! Each replica retrains on a fresh 95/5 label mix of the clean training
//! data (optionally a stratified subsample, to match the row count of the
//! models that will be monitored). The per-signature threshold is
//! mean + 3*std of |sum| over replicas, floored at 1e-6.

use serde::{Deserialize, Serialize};

use crate::bagged_trees::{predictor_importance, train, RelevanceProfile, TrainConfig};
use crate::drift_lab::clean_label_mix;
use crate::error::{Error, Result};
use crate::fingerprint::diff::relevance_diff;
use crate::fingerprint::signature::DriftSignature;
use crate::seed;
use crate::stratify;
use crate::types::FeatureMatrix;

pub const THRESHOLD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub n_replicas: usize,
    /// Train replicas on a stratified subsample of this many rows, matching
    /// the scale of the models the thresholds will judge. `None` = all rows.
    pub replica_rows: Option<usize>,
    pub seed: u64,
    /// Test hook: pin every replica's (mix seed, train seed) to one pair so
    /// all replicas coincide with a reference trained the same way.
    pub pin_replica_seeds: Option<(u64, u64)>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            n_replicas: 30,
            replica_rows: None,
            seed: 0,
            pin_replica_seeds: None,
        }
    }
}

/// Per-signature |sum| statistics over the calibration replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub n_replicas: usize,
    /// One row per signature, in signature order: replica |sums|.
    pub abs_sums: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
}

const SALT_ROWS: u64 = 0x70b5;
const SALT_MIX: u64 = 0x317a;
const SALT_TRAIN: u64 = 0x7a11;

/// Seeds for calibration replica r; shared with false-alarm evaluations so
/// held-out replicas can use a disjoint salt space.
pub fn replica_seeds(cal_seed: u64, r: usize) -> (u64, u64, u64) {
    (
        seed::mix_path(cal_seed, &[SALT_ROWS, r as u64]),
        seed::mix_path(cal_seed, &[SALT_MIX, r as u64]),
        seed::mix_path(cal_seed, &[SALT_TRAIN, r as u64]),
    )
}

/// Train one clean replica and return its relevance profile.
pub fn clean_replica_profile(
    clean_train: &FeatureMatrix,
    train_cfg: &TrainConfig,
    replica_rows: Option<usize>,
    rows_seed: u64,
    mix_seed: u64,
    train_seed: u64,
) -> Result<RelevanceProfile> {
    let base = match replica_rows {
        Some(target) if target < clean_train.n_rows() => {
            let idx = stratify::stratified_subsample(clean_train, target, rows_seed);
            clean_train.select_rows(&idx)
        }
        _ => clean_train.clone(),
    };
    let mixed = clean_label_mix(&base, mix_seed)?;
    let model = train(&mixed, train_cfg, train_seed)?;
    Ok(predictor_importance(&model))
}

/// Fill in each signature's threshold from clean-replica sums against the
/// reference profile.
pub fn calibrate_thresholds(
    clean_train: &FeatureMatrix,
    reference: &RelevanceProfile,
    signatures: &mut [DriftSignature],
    train_cfg: &TrainConfig,
    cal: &CalibrationConfig,
) -> Result<CalibrationReport> {
    if cal.n_replicas < 10 {
        return Err(Error::BadArgument(format!(
            "calibration needs >= 10 replicas, got {}",
            cal.n_replicas
        )));
    }
    clean_train.assert_trainable("calibrate_thresholds")?;

    let mut abs_sums: Vec<Vec<f64>> = vec![Vec::with_capacity(cal.n_replicas); signatures.len()];
    for r in 0..cal.n_replicas {
        let (rows_seed, mut mix_seed, mut train_seed) = replica_seeds(cal.seed, r);
        if let Some((pin_mix, pin_train)) = cal.pin_replica_seeds {
            mix_seed = pin_mix;
            train_seed = pin_train;
        }
        let profile = clean_replica_profile(
            clean_train,
            train_cfg,
            cal.replica_rows,
            rows_seed,
            mix_seed,
            train_seed,
        )?;
        let diff = relevance_diff(reference, &profile, None)?;
        for (sig, sums) in signatures.iter().zip(abs_sums.iter_mut()) {
            sums.push(diff.sum_over(&sig.feature_indices).abs());
        }
    }

    let mut thresholds = Vec::with_capacity(signatures.len());
    for (sig, sums) in signatures.iter_mut().zip(&abs_sums) {
        let n = sums.len() as f64;
        let mean = sums.iter().sum::<f64>() / n;
        let var = sums.iter().map(|&s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
        sig.threshold = (mean + 3.0 * var.sqrt()).max(THRESHOLD_FLOOR);
        thresholds.push(sig.threshold);
    }
    Ok(CalibrationReport { n_replicas: cal.n_replicas, abs_sums, thresholds })
}
