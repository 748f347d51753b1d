//! Corruption-ratio sweeps: per (subject, scenario, grid ratio) train a
//! candidate model on corrupted labels, compare its relevance profile to the
//! clean reference, and record signature sums, verdict, held-out accuracy
//! and per-class recall.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use driftsig_core::bagged_trees::{predictor_importance, train};
use driftsig_core::drift_lab::{clean_label_mix, corrupt_labels};
use driftsig_core::fingerprint::{detect_and_explain, DetectConfig, UNKNOWN_EXPLANATION};
use driftsig_core::io::fmt_f64;
use driftsig_core::seed;
use driftsig_core::types::{ClassId, FeatureMatrix};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::pipeline::{salts, DataBundle};
use crate::protocol::LoadedProtocol;

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub subject_id: String,
    pub scenario_id: String,
    pub ratio: f64,
    /// Signature sums keyed by signature scenario id; missing when the
    /// subject's selection dropped that scenario.
    pub signature_sums: BTreeMap<String, f64>,
    pub drift_detected: bool,
    pub explanation: Option<String>,
    pub test_accuracy: f64,
    /// Recall per class id on the held-out part.
    pub class_recalls: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub scenario_ids: Vec<String>,
    pub activity_names: Vec<String>,
    pub grid: Vec<f64>,
    pub subject_ids: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn recalls(
    model: &driftsig_core::BaggedTreeModel,
    test: &FeatureMatrix,
) -> driftsig_core::Result<(f64, Vec<f64>)> {
    let mut correct_per_class = vec![0usize; test.class_count];
    let mut count_per_class = vec![0usize; test.class_count];
    let mut correct = 0usize;
    for (row, &label) in test.rows.iter().zip(&test.labels) {
        let predicted = model.predict(row)?.class;
        count_per_class[label] += 1;
        if predicted == label {
            correct += 1;
            correct_per_class[label] += 1;
        }
    }
    let recalls = correct_per_class
        .iter()
        .zip(&count_per_class)
        .map(|(&c, &n)| if n == 0 { f64::NAN } else { c as f64 / n as f64 })
        .collect();
    Ok((correct as f64 / test.n_rows() as f64, recalls))
}

/// Run the full sweep grid. Work items parallelize freely; output order is
/// (subject, scenario, ratio).
pub fn run_sweep(
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
    protocol: &[LoadedProtocol],
) -> Result<SweepReport> {
    let scenarios = cfg.resolve_scenarios(&bundle.activity_names)?;

    let mut tasks = Vec::new();
    for subject_index in 0..bundle.subjects.len() {
        for scenario_index in 0..scenarios.len() {
            for (ratio_index, &ratio) in cfg.sweep_grid.iter().enumerate() {
                tasks.push((subject_index, scenario_index, ratio_index, ratio));
            }
        }
    }

    let rows: Vec<SweepRow> = tasks
        .par_iter()
        .map(|&(subject_index, scenario_index, ratio_index, ratio)| {
            let subject = &bundle.subjects[subject_index];
            let loaded = &protocol[subject_index];
            let scenario = &scenarios[scenario_index];
            let pool = subject.split.train_pool()?;

            // Ratio 0 must reproduce the clean baseline, which trains on the
            // 95/5 mix; the scenario corrupts on top of that base.
            let base = clean_label_mix(
                &pool,
                seed::mix_path(
                    cfg.seed,
                    &[
                        salts::SWEEP_MIX,
                        subject_index as u64,
                        scenario_index as u64,
                        ratio_index as u64,
                    ],
                ),
            )?;
            let corrupted = corrupt_labels(
                &base,
                &driftsig_core::drift_lab::DriftScenario {
                    ratio,
                    seed: seed::mix_path(
                        cfg.seed,
                        &[
                            salts::SWEEP_CORRUPT,
                            subject_index as u64,
                            scenario_index as u64,
                            ratio_index as u64,
                        ],
                    ),
                    ..scenario.clone()
                },
            )?;
            let candidate = train(
                &corrupted,
                &cfg.train,
                seed::mix_path(
                    cfg.seed,
                    &[
                        salts::SWEEP_TRAIN,
                        subject_index as u64,
                        scenario_index as u64,
                        ratio_index as u64,
                    ],
                ),
            )?;
            let verdict = detect_and_explain(
                &loaded.clean_profile,
                &predictor_importance(&candidate),
                &loaded.signatures,
                &DetectConfig::default(),
            )?;
            let (test_accuracy, class_recalls) = recalls(&candidate, &subject.split.test)?;
            Ok(SweepRow {
                subject_id: subject.subject_id.clone(),
                scenario_id: scenario.id.clone(),
                ratio,
                signature_sums: verdict.signature_sums,
                drift_detected: verdict.drift_detected,
                explanation: verdict.explanation,
                test_accuracy,
                class_recalls,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepReport {
        scenario_ids: scenarios.iter().map(|s| s.id.clone()).collect(),
        activity_names: bundle.activity_names.clone(),
        grid: cfg.sweep_grid.clone(),
        subject_ids: bundle.subject_ids(),
        rows,
    })
}

/// Long-format CSV: one row per (subject, scenario, ratio).
pub fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["subject".to_string(), "scenario".to_string(), "ratio".to_string()];
    for id in &report.scenario_ids {
        header.push(format!("sum_{id}"));
    }
    header.push("drift_detected".into());
    header.push("explanation".into());
    header.push("test_accuracy".into());
    for name in &report.activity_names {
        header.push(format!("recall_{name}"));
    }
    w.write_record(&header)?;

    for row in &report.rows {
        let mut record = vec![row.subject_id.clone(), row.scenario_id.clone(), fmt_f64(row.ratio)];
        for id in &report.scenario_ids {
            record.push(row.signature_sums.get(id).map(|&v| fmt_f64(v)).unwrap_or_default());
        }
        record.push(row.drift_detected.to_string());
        record.push(row.explanation.clone().unwrap_or_else(|| UNKNOWN_EXPLANATION.into()));
        record.push(fmt_f64(row.test_accuracy));
        for &r in &row.class_recalls {
            record.push(if r.is_nan() { String::new() } else { fmt_f64(r) });
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Read the sweep CSV back for reporting.
pub fn read_sweep_csv(path: &Path, report_shape: &SweepShape) -> Result<SweepReport> {
    let mut r = csv::Reader::from_path(path)?;
    let n_scen = report_shape.scenario_ids.len();
    let n_classes = report_shape.activity_names.len();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let mut i = 0usize;
        let mut next = || {
            let v = record.get(i).unwrap_or("").to_string();
            i += 1;
            v
        };
        let subject_id = next();
        let scenario_id = next();
        let ratio: f64 = next().parse().unwrap_or(f64::NAN);
        let mut signature_sums = BTreeMap::new();
        for id in &report_shape.scenario_ids {
            let raw = next();
            if !raw.is_empty() {
                if let Ok(v) = raw.parse::<f64>() {
                    signature_sums.insert(id.clone(), v);
                }
            }
        }
        let drift_detected = next() == "true";
        let exp_raw = next();
        let explanation = (exp_raw != UNKNOWN_EXPLANATION).then_some(exp_raw);
        let test_accuracy: f64 = next().parse().unwrap_or(f64::NAN);
        let mut class_recalls = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let raw = next();
            class_recalls.push(if raw.is_empty() {
                f64::NAN
            } else {
                raw.parse().unwrap_or(f64::NAN)
            });
        }
        let _ = n_scen;
        rows.push(SweepRow {
            subject_id,
            scenario_id,
            ratio,
            signature_sums,
            drift_detected,
            explanation,
            test_accuracy,
            class_recalls,
        });
    }
    Ok(SweepReport {
        scenario_ids: report_shape.scenario_ids.clone(),
        activity_names: report_shape.activity_names.clone(),
        grid: report_shape.grid.clone(),
        subject_ids: report_shape.subject_ids.clone(),
        rows,
    })
}

/// The shape metadata needed to parse a sweep CSV.
#[derive(Debug, Clone)]
pub struct SweepShape {
    pub scenario_ids: Vec<String>,
    pub activity_names: Vec<String>,
    pub grid: Vec<f64>,
    pub subject_ids: Vec<String>,
}

/// Map a class id to the class ids whose recall a scenario is expected to
/// hurt; used by reporting.
pub fn affected_classes(
    scenario: &driftsig_core::drift_lab::DriftScenario,
) -> Vec<ClassId> {
    scenario.affected_classes()
}
