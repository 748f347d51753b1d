//! Streaming personalization run: a leave-one-subject-out user-independent
//! model consumes each subject's part-2 stream in self-training chunks. A
//! configured scenario corrupts the self-training labels mid-stream; every
//! new chunk model is screened with the drift signatures before joining the
//! ensemble, and flagged models are rejected or repaired by asking "the
//! user" (ground truth) to relabel only the explained classes.
//!
//! Chunk models see roughly a ninth of the data the protocol models saw, so
//! the screen uses chunk-scale artifacts by default: a chunk-sized clean
//! reference and thresholds/sign patterns recalibrated at that scale over
//! the protocol-selected feature sets.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use driftsig_core::bagged_trees::{
    mean_profile, predictor_importance, train, RelevanceProfile,
};
use driftsig_core::drift_lab::{corrupt_labels, DriftScenario};
use driftsig_core::fingerprint::{
    detect_and_explain, relevance_diff, DetectConfig, DriftSignature, SumSign,
    THRESHOLD_FLOOR, UNKNOWN_EXPLANATION,
};
use driftsig_core::incremental::{
    admit_model, init, label_chunk, EnsembleModel, LabelPolicy, WeightingRule,
};
use driftsig_core::io::fmt_f64;
use driftsig_core::seed;
use driftsig_core::stratify;
use driftsig_core::types::{ClassId, FeatureMatrix};

use crate::artifacts::OutputLayout;
use crate::config::{ExperimentConfig, RepairPolicy};
use crate::error::{HarnessError, Result};
use crate::pipeline::{salts, DataBundle};
use crate::protocol::LoadedProtocol;

/// One JSON record per processed chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub subject_id: String,
    pub chunk_index: usize,
    pub rows: usize,
    /// Whether the injected scenario corrupted this chunk's labels.
    pub injected: bool,
    pub drift_detected: bool,
    #[serde(
        serialize_with = "ser_explanation",
        deserialize_with = "de_explanation"
    )]
    pub explanation: Option<String>,
    pub signature_sums: BTreeMap<String, f64>,
    /// Labels a human would supply under explained-classes-only relabeling;
    /// zero when the chunk was not flagged.
    pub labels_requested_explained: usize,
    /// Baseline: relabeling the whole flagged chunk.
    pub labels_requested_whole_chunk: usize,
    pub admitted: bool,
    pub repaired: bool,
    pub post_repair_detected: Option<bool>,
    pub model_error_on_chunk: Option<f64>,
    pub model_weight: Option<f64>,
}

fn ser_explanation<S: serde::Serializer>(
    v: &Option<String>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(v.as_deref().unwrap_or(UNKNOWN_EXPLANATION))
}

fn de_explanation<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<String>, D::Error> {
    use serde::Deserialize;
    let raw = String::deserialize(d)?;
    Ok((raw != UNKNOWN_EXPLANATION).then_some(raw))
}

#[derive(Debug, Clone)]
pub struct IncrementalReport {
    pub records: Vec<ChunkRecord>,
}

/// Chunk-scale screening artifacts for one subject.
struct ChunkScreen {
    reference: RelevanceProfile,
    signatures: Vec<DriftSignature>,
}

/// Simulate drifted self-training labels. The scenario picks rows by their
/// true class (the instances an actual drift would mispredict); picked rows
/// carry the drifted label, everything else keeps the model's prediction.
fn drifted_training_labels(
    chunk_with_true_labels: &FeatureMatrix,
    self_labels: &[ClassId],
    scenario: &DriftScenario,
    ratio: f64,
    corrupt_seed: u64,
) -> Result<Vec<ClassId>> {
    let corrupted = corrupt_labels(
        chunk_with_true_labels,
        &DriftScenario { ratio, seed: corrupt_seed, ..scenario.clone() },
    )?;
    Ok((0..chunk_with_true_labels.n_rows())
        .map(|i| {
            if corrupted.labels[i] != chunk_with_true_labels.labels[i] {
                corrupted.labels[i]
            } else {
                self_labels[i]
            }
        })
        .collect())
}

/// Rebuild the clean reference, sign patterns and thresholds at chunk scale,
/// keeping the protocol-selected feature sets.
///
/// The null distribution of a healthy chunk model is "trained on the prior
/// model's predicted labels", not "trained on true labels": replicas and the
/// reference are therefore self-labeled by the user-independent model, and
/// worst cases corrupt those self-labels, mirroring the injection mechanics.
fn chunk_scale_screen(
    cfg: &ExperimentConfig,
    pool: &FeatureMatrix,
    prior: &driftsig_core::BaggedTreeModel,
    scenarios: &[DriftScenario],
    protocol_signatures: &[DriftSignature],
    chunk_rows: usize,
    subject_index: u64,
) -> Result<ChunkScreen> {
    // A healthy chunk trains on the prior model's predictions; the sampled
    // matrix keeps true labels so scenario corruption can target the rows an
    // actual drift would hit.
    let subsample = |rows_salt: u64, extra: &[u64]| -> FeatureMatrix {
        let mut salt_path = vec![rows_salt, subject_index];
        salt_path.extend_from_slice(extra);
        let rows = stratify::stratified_subsample(
            pool,
            chunk_rows,
            seed::mix_path(cfg.seed, &salt_path),
        );
        pool.select_rows(&rows)
    };
    let self_labels = |m: &FeatureMatrix| -> Result<Vec<ClassId>> {
        m.rows
            .iter()
            .map(|row| Ok(prior.predict(row)?.class))
            .collect()
    };

    let replicas = cfg.anchor_replicas as u64;
    let reference = mean_profile(
        &(0..replicas)
            .map(|r| {
                let mut m = subsample(salts::CHUNK_CLEAN_ROWS, &[r]);
                m.labels = self_labels(&m)?;
                let model = train(
                    &m,
                    &cfg.train,
                    seed::mix_path(cfg.seed, &[salts::CHUNK_CLEAN_TRAIN, subject_index, r]),
                )?;
                Ok(predictor_importance(&model))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;

    // Chunk-scale worst cases re-record each signature's expected signs.
    let mut worst_diff_sums: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (scenario_index, scenario) in scenarios.iter().enumerate() {
        let mut profiles = Vec::with_capacity(cfg.anchor_replicas);
        for r in 0..replicas {
            let m = subsample(salts::CHUNK_WORST_ROWS, &[scenario_index as u64, r]);
            let labels = drifted_training_labels(
                &m,
                &self_labels(&m)?,
                scenario,
                1.0,
                seed::mix_path(
                    cfg.seed,
                    &[
                        salts::CHUNK_WORST_CORRUPT,
                        subject_index,
                        scenario_index as u64,
                        r,
                    ],
                ),
            )?;
            let mut corrupted = m;
            corrupted.labels = labels;
            let model = train(
                &corrupted,
                &cfg.train,
                seed::mix_path(
                    cfg.seed,
                    &[salts::CHUNK_WORST_TRAIN, subject_index, scenario_index as u64, r],
                ),
            )?;
            profiles.push(predictor_importance(&model));
        }
        let diff = relevance_diff(&reference, &mean_profile(&profiles)?, None)?;
        let sums = protocol_signatures
            .iter()
            .map(|sig| (sig.scenario_id.clone(), diff.sum_over(&sig.feature_indices)))
            .collect();
        worst_diff_sums.insert(scenario.id.clone(), sums);
    }

    let mut signatures: Vec<DriftSignature> = protocol_signatures
        .iter()
        .map(|sig| {
            let mut pattern = BTreeMap::new();
            for (scenario_id, sums) in &worst_diff_sums {
                pattern.insert(scenario_id.clone(), SumSign::of(sums[&sig.scenario_id]));
            }
            DriftSignature { expected_sign_pattern: pattern, threshold: 0.0, ..sig.clone() }
        })
        .collect();

    // Thresholds: mean + 3 sd of |sum| over self-labeled clean replicas.
    let mut abs_sums: Vec<Vec<f64>> = vec![Vec::new(); signatures.len()];
    for r in 0..cfg.calibration.n_replicas as u64 {
        let mut m = subsample(salts::CHUNK_CAL_ROWS, &[r]);
        m.labels = self_labels(&m)?;
        let model = train(
            &m,
            &cfg.train,
            seed::mix_path(cfg.seed, &[salts::CHUNK_CAL_TRAIN, subject_index, r]),
        )?;
        let diff = relevance_diff(&reference, &predictor_importance(&model), None)?;
        for (sig, sums) in signatures.iter().zip(abs_sums.iter_mut()) {
            sums.push(diff.sum_over(&sig.feature_indices).abs());
        }
    }
    for (sig, sums) in signatures.iter_mut().zip(&abs_sums) {
        let n = sums.len() as f64;
        let mean = sums.iter().sum::<f64>() / n;
        let var = sums.iter().map(|&s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
        sig.threshold = (mean + 3.0 * var.sqrt()).max(THRESHOLD_FLOOR);
    }

    Ok(ChunkScreen { reference, signatures })
}

fn run_subject(
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
    protocol: &[LoadedProtocol],
    subject_index: usize,
) -> Result<Vec<ChunkRecord>> {
    let subject = &bundle.subjects[subject_index];
    let scenarios = cfg.resolve_scenarios(&bundle.activity_names)?;

    // Leave-one-subject-out prior model on true labels.
    let others: Vec<FeatureMatrix> = bundle
        .subjects
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != subject_index)
        .map(|(_, s)| s.split.train_pool())
        .collect::<driftsig_core::Result<_>>()?;
    if others.is_empty() {
        return Err(HarnessError::Config(
            "incremental run needs at least 2 subjects for the user-independent model".into(),
        ));
    }
    let other_refs: Vec<&FeatureMatrix> = others.iter().collect();
    let loso_pool = FeatureMatrix::concat(&other_refs)?;
    let user_independent = train(
        &loso_pool,
        &cfg.train,
        seed::mix_path(cfg.seed, &[salts::LOSO_TRAIN, subject_index as u64]),
    )?;

    // Part-2 stream, stratified into chunks.
    let part2 = &subject.split.train_b;
    let chunks = stratify::stratified_chunks(
        part2,
        cfg.chunks_per_subject,
        seed::mix_path(cfg.seed, &[salts::CHUNKS, subject_index as u64]),
    );
    let chunk_rows = part2.n_rows() / cfg.chunks_per_subject;

    let pool = subject.split.train_pool()?;
    let loaded = &protocol[subject_index];
    let screen = if cfg.calibration.chunk_scale {
        chunk_scale_screen(
            cfg,
            &pool,
            &user_independent,
            &scenarios,
            &loaded.signatures,
            chunk_rows.max(1),
            subject_index as u64,
        )?
    } else {
        ChunkScreen {
            reference: loaded.clean_profile.clone(),
            signatures: loaded.signatures.clone(),
        }
    };

    let injection = cfg.injection.as_ref();
    let mut ensemble: EnsembleModel = init(user_independent);
    let mut records = Vec::with_capacity(chunks.len());

    for (chunk_index, chunk_rows_idx) in chunks.iter().enumerate() {
        let chunk = part2.select_rows(chunk_rows_idx);
        let self_labels = label_chunk(&ensemble, &chunk, &LabelPolicy::PureSelfTraining)?;

        let injected = injection.is_some_and(|inj| chunk_index >= inj.at_chunk);
        let training_labels: Vec<ClassId> = if let (true, Some(inj)) = (injected, injection) {
            let scenario = scenarios
                .iter()
                .find(|s| s.id == inj.scenario_id)
                .expect("validated against config");
            drifted_training_labels(
                &chunk,
                &self_labels.training_labels,
                scenario,
                inj.ratio,
                seed::mix_path(
                    cfg.seed,
                    &[salts::INJECT, subject_index as u64, chunk_index as u64],
                ),
            )?
        } else {
            self_labels.training_labels.clone()
        };

        let mut training_chunk = chunk.clone();
        training_chunk.labels = training_labels.clone();
        let candidate = train(
            &training_chunk,
            &cfg.train,
            seed::mix_path(cfg.seed, &[salts::CHUNK_TRAIN, subject_index as u64, chunk_index as u64]),
        )?;
        let verdict = detect_and_explain(
            &screen.reference,
            &predictor_importance(&candidate),
            &screen.signatures,
            &DetectConfig::default(),
        )?;

        let mut record = ChunkRecord {
            subject_id: subject.subject_id.clone(),
            chunk_index,
            rows: chunk.n_rows(),
            injected,
            drift_detected: verdict.drift_detected,
            explanation: verdict.explanation.clone(),
            signature_sums: verdict.signature_sums.clone(),
            labels_requested_explained: 0,
            labels_requested_whole_chunk: 0,
            admitted: false,
            repaired: false,
            post_repair_detected: None,
            model_error_on_chunk: None,
            model_weight: None,
        };

        if !verdict.drift_detected {
            let (_, error_rate, weight) = admit_model(
                &mut ensemble,
                candidate,
                &chunk,
                &training_labels,
                WeightingRule::LogOdds,
                chunk_index,
                0,
            )?;
            record.admitted = true;
            record.model_error_on_chunk = Some(error_rate);
            record.model_weight = Some(weight);
            records.push(record);
            continue;
        }

        // Flagged: count the labels a human would provide. The explained
        // scenario narrows the request to rows currently labeled with its
        // classes; an unexplained detection falls back to the whole chunk.
        record.labels_requested_whole_chunk = chunk.n_rows();
        let affected: Vec<ClassId> = verdict
            .explanation
            .as_ref()
            .and_then(|id| scenarios.iter().find(|s| &s.id == id))
            .map(|s| s.affected_classes())
            .unwrap_or_default();
        let relabel_rows: Vec<usize> = if affected.is_empty() {
            (0..chunk.n_rows()).collect()
        } else {
            (0..chunk.n_rows())
                .filter(|&i| affected.contains(&training_labels[i]))
                .collect()
        };
        record.labels_requested_explained = relabel_rows.len();

        if cfg.repair_policy == RepairPolicy::Repair {
            let mut repaired_labels = training_labels.clone();
            for &i in &relabel_rows {
                repaired_labels[i] = chunk.labels[i]; // ground truth
            }
            let mut repaired_chunk = chunk.clone();
            repaired_chunk.labels = repaired_labels.clone();
            let repaired_model = train(
                &repaired_chunk,
                &cfg.train,
                seed::mix_path(
                    cfg.seed,
                    &[salts::REPAIR_TRAIN, subject_index as u64, chunk_index as u64],
                ),
            )?;
            let post = detect_and_explain(
                &screen.reference,
                &predictor_importance(&repaired_model),
                &screen.signatures,
                &DetectConfig::default(),
            )?;
            record.post_repair_detected = Some(post.drift_detected);
            record.repaired = true;
            if !post.drift_detected {
                let (_, error_rate, weight) = admit_model(
                    &mut ensemble,
                    repaired_model,
                    &chunk,
                    &repaired_labels,
                    WeightingRule::LogOdds,
                    chunk_index,
                    relabel_rows.len(),
                )?;
                record.admitted = true;
                record.model_error_on_chunk = Some(error_rate);
                record.model_weight = Some(weight);
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// Run the incremental stream for every subject. Subjects parallelize;
/// chunks within a subject are inherently sequential.
pub fn run_incremental(
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
    protocol: &[LoadedProtocol],
) -> Result<IncrementalReport> {
    if bundle.subjects.len() < 2 {
        return Err(HarnessError::Config(
            "incremental run needs at least 2 subjects for the user-independent model".into(),
        ));
    }
    let per_subject: Vec<Vec<ChunkRecord>> = (0..bundle.subjects.len())
        .into_par_iter()
        .map(|idx| run_subject(cfg, bundle, protocol, idx))
        .collect::<Result<_>>()?;
    Ok(IncrementalReport { records: per_subject.into_iter().flatten().collect() })
}

/// Verdicts as JSON-lines plus a flat CSV chunk log.
pub fn persist_incremental(
    layout: &OutputLayout,
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
    report: &IncrementalReport,
) -> Result<()> {
    let dir = layout.incremental_dir();
    layout.ensure_dir(&dir)?;

    let mut jsonl = String::new();
    for record in &report.records {
        jsonl.push_str(&serde_json::to_string(record)?);
        jsonl.push('\n');
    }
    std::fs::write(dir.join("verdicts.jsonl"), jsonl)?;

    let mut w = csv::Writer::from_path(dir.join("chunk_log.csv"))?;
    w.write_record([
        "subject",
        "chunk",
        "rows",
        "injected",
        "drift_detected",
        "explanation",
        "labels_requested_explained",
        "labels_requested_whole_chunk",
        "admitted",
        "repaired",
        "post_repair_detected",
        "model_error_on_chunk",
        "model_weight",
    ])?;
    for r in &report.records {
        w.write_record([
            r.subject_id.clone(),
            r.chunk_index.to_string(),
            r.rows.to_string(),
            r.injected.to_string(),
            r.drift_detected.to_string(),
            r.explanation.clone().unwrap_or_else(|| UNKNOWN_EXPLANATION.into()),
            r.labels_requested_explained.to_string(),
            r.labels_requested_whole_chunk.to_string(),
            r.admitted.to_string(),
            r.repaired.to_string(),
            r.post_repair_detected.map(|b| b.to_string()).unwrap_or_default(),
            r.model_error_on_chunk.map(fmt_f64).unwrap_or_default(),
            r.model_weight.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    layout.record_stage(
        cfg,
        &bundle.bank_version,
        "incremental",
        &format!("{} chunk records", report.records.len()),
    )?;
    Ok(())
}
