//! Plot-ready report files derived from the sweep.
//!
//! One CSV per figure analogue, lettered by scenario order: the `fig2*`
//! files carry each scenario's own signature sum, held-out accuracy and
//! affected-class recall against the corruption ratio; the `fig3*` files
//! put all signature sums side by side for the same injected scenario.
//! Values are means over subjects. `summary.json` maps letters back to
//! scenario ids.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use driftsig_core::drift_lab::ScenarioKind;
use driftsig_core::io::{self, fmt_f64};

use crate::artifacts::OutputLayout;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::pipeline::DataBundle;
use crate::sweep::SweepReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub figures: BTreeMap<String, String>,
    pub subjects: Vec<String>,
    pub scenario_ids: Vec<String>,
    pub grid: Vec<f64>,
    pub sweep_rows: usize,
    /// Fraction of rows with a correct explanation, per scenario per ratio.
    pub explanation_accuracy: BTreeMap<String, Vec<f64>>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        if v.is_finite() {
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn figure_letter(index: usize) -> char {
    (b'a' + index as u8) as char
}

/// Emit fig2*/fig3* CSVs and summary.json into the report directory.
pub fn emit_report(
    layout: &OutputLayout,
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
    sweep: &SweepReport,
) -> Result<()> {
    let dir = layout.report_dir();
    layout.ensure_dir(&dir)?;
    let scenarios = cfg.resolve_scenarios(&bundle.activity_names)?;

    let mut figures = BTreeMap::new();
    let mut explanation_accuracy = BTreeMap::new();

    for (scenario_index, scenario) in scenarios.iter().enumerate() {
        let letter = figure_letter(scenario_index);

        // Affected class for the recall column: the confusion target (the
        // class whose labels absorb the corruption); macro mean otherwise.
        let affected_class: Option<usize> = match scenario.kind {
            ScenarioKind::ClassConfusion { target_class, .. } => Some(target_class),
            ScenarioKind::UniformNoise { .. } => None,
        };

        let fig2_path = dir.join(format!("fig2{letter}.csv"));
        let mut w = csv::Writer::from_path(&fig2_path)?;
        w.write_record(["ratio", "relevance_sum", "test_accuracy", "affected_class_recall"])?;

        let fig3_path = dir.join(format!("fig3{letter}.csv"));
        let mut w3 = csv::Writer::from_path(&fig3_path)?;
        let mut header3 = vec!["ratio".to_string()];
        header3.extend(sweep.scenario_ids.iter().map(|id| format!("sum_{id}")));
        w3.write_record(&header3)?;

        let mut acc_per_ratio = Vec::with_capacity(sweep.grid.len());
        for &ratio in &sweep.grid {
            let rows: Vec<_> = sweep
                .rows
                .iter()
                .filter(|r| r.scenario_id == scenario.id && r.ratio == ratio)
                .collect();

            let own_sum = mean(
                rows.iter()
                    .filter_map(|r| r.signature_sums.get(&scenario.id).copied()),
            );
            let accuracy = mean(rows.iter().map(|r| r.test_accuracy));
            let recall = mean(rows.iter().map(|r| match affected_class {
                Some(c) => r.class_recalls.get(c).copied().unwrap_or(f64::NAN),
                None => mean(r.class_recalls.iter().copied()),
            }));
            w.write_record([
                fmt_f64(ratio),
                fmt_f64(own_sum),
                fmt_f64(accuracy),
                fmt_f64(recall),
            ])?;

            let mut record3 = vec![fmt_f64(ratio)];
            for id in &sweep.scenario_ids {
                record3.push(fmt_f64(mean(
                    rows.iter().filter_map(|r| r.signature_sums.get(id).copied()),
                )));
            }
            w3.write_record(&record3)?;

            let correct = rows
                .iter()
                .filter(|r| r.explanation.as_deref() == Some(scenario.id.as_str()))
                .count();
            acc_per_ratio.push(if rows.is_empty() {
                f64::NAN
            } else {
                correct as f64 / rows.len() as f64
            });
        }
        w.flush()?;
        w3.flush()?;
        figures.insert(format!("fig2{letter}"), scenario.id.clone());
        figures.insert(format!("fig3{letter}"), scenario.id.clone());
        explanation_accuracy.insert(scenario.id.clone(), acc_per_ratio);
    }

    let summary = ReportSummary {
        figures,
        subjects: sweep.subject_ids.clone(),
        scenario_ids: sweep.scenario_ids.clone(),
        grid: sweep.grid.clone(),
        sweep_rows: sweep.rows.len(),
        explanation_accuracy,
    };
    io::write_json(&dir.join("summary.json"), &summary)?;
    layout.record_stage(cfg, &bundle.bank_version, "report", "figure CSVs + summary")?;
    Ok(())
}

/// Columns every fig2 file carries, pinned for consumers.
pub const FIG2_COLUMNS: [&str; 4] =
    ["ratio", "relevance_sum", "test_accuracy", "affected_class_recall"];

pub fn read_fig_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        rows.push(
            record
                .iter()
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                .collect(),
        );
    }
    Ok((header, rows))
}
