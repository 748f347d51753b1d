//! Windowed feature extraction from raw sensor recordings.
//!
//! A recording expands to 14 derived signals (6 raw axes, 2 magnitudes,
//! 6 pairwise square sums), which are sliced into fixed-length sliding
//! windows; each window yields one feature vector per the configured
//! [`FeatureBank`]. Extraction is a pure function of (recording, config,
//! bank): identical inputs produce bit-identical matrices.

pub mod bank;
pub mod sfs;
pub mod spectral;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bank::FeatureBank;
pub use sfs::{sfs_select, SfsConfig};

use crate::error::{Error, Result};
use crate::types::{ClassId, FeatureMatrix, RowTag, SensorRecording};
use spectral::SpectrumAnalyzer;
use stats::time_domain_features;

/// 6 raw axes + 2 magnitudes + 6 pairwise square sums.
pub const DERIVED_SIGNAL_COUNT: usize = 14;

pub fn derived_signal_names() -> [&'static str; DERIVED_SIGNAL_COUNT] {
    [
        "acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z", "acc_mag", "gyro_mag",
        "acc_sq_xy", "acc_sq_xz", "acc_sq_yz", "gyro_sq_xy", "gyro_sq_xz", "gyro_sq_yz",
    ]
}

/// Expand a recording into the 14 derived series, each as long as the input.
pub fn derive_signals(rec: &SensorRecording) -> Result<Vec<Vec<f64>>> {
    rec.validate()?;
    let n = rec.len();
    let ch = &rec.channels;

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(DERIVED_SIGNAL_COUNT);
    for axis in ch.iter() {
        out.push(axis.clone());
    }
    for sensor in 0..2 {
        let o = sensor * 3;
        let mag = (0..n)
            .map(|i| {
                (ch[o][i] * ch[o][i] + ch[o + 1][i] * ch[o + 1][i] + ch[o + 2][i] * ch[o + 2][i])
                    .sqrt()
            })
            .collect();
        out.push(mag);
    }
    for sensor in 0..2 {
        let o = sensor * 3;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let sq = (0..n)
                .map(|i| ch[o + a][i] * ch[o + a][i] + ch[o + b][i] * ch[o + b][i])
                .collect();
            out.push(sq);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Most frequent sample label wins; ties go to the lowest class id.
    #[default]
    Majority,
    /// Windows whose samples disagree are skipped.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowingConfig {
    pub window_seconds: f64,
    pub slide_seconds: f64,
    pub label_rule: LabelRule,
}

impl Default for WindowingConfig {
    fn default() -> Self {
        WindowingConfig {
            window_seconds: 4.2,
            slide_seconds: 1.4,
            label_rule: LabelRule::Majority,
        }
    }
}

impl WindowingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.slide_seconds > 0.0 && self.slide_seconds <= self.window_seconds) {
            return Err(Error::BadArgument(format!(
                "need 0 < slide ({}) <= window ({})",
                self.slide_seconds, self.window_seconds
            )));
        }
        Ok(())
    }

    pub fn window_samples(&self, sample_rate_hz: f64) -> usize {
        (self.window_seconds * sample_rate_hz).round() as usize
    }

    pub fn slide_samples(&self, sample_rate_hz: f64) -> usize {
        ((self.slide_seconds * sample_rate_hz).round() as usize).max(1)
    }

    /// floor((len - window) / slide) + 1
    pub fn window_count(&self, len: usize, sample_rate_hz: f64) -> usize {
        let w = self.window_samples(sample_rate_hz);
        if len < w {
            return 0;
        }
        (len - w) / self.slide_samples(sample_rate_hz) + 1
    }
}

fn window_label(labels: &[ClassId], class_count: usize, rule: LabelRule) -> Option<ClassId> {
    match rule {
        LabelRule::Strict => {
            let first = labels[0];
            labels.iter().all(|&l| l == first).then_some(first)
        }
        LabelRule::Majority => {
            let mut counts = vec![0usize; class_count];
            for &l in labels {
                counts[l] += 1;
            }
            // max_by_key keeps the earlier (lower) id on ties.
            counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(id, _)| id)
        }
    }
}

/// Slice a recording into windows and compute one feature row per window.
pub fn extract_windows(
    rec: &SensorRecording,
    w: &WindowingConfig,
    bank: &FeatureBank,
) -> Result<FeatureMatrix> {
    w.validate()?;
    bank.validate()?;
    let signals = derive_signals(rec)?;

    let wlen = w.window_samples(rec.sample_rate_hz);
    let slide = w.slide_samples(rec.sample_rate_hz);
    if wlen == 0 {
        return Err(Error::BadArgument("window shorter than one sample".into()));
    }
    if rec.len() < wlen {
        return Err(Error::InsufficientData(format!(
            "recording has {} samples, window needs {wlen}",
            rec.len()
        )));
    }

    let n_windows = (rec.len() - wlen) / slide + 1;
    let analyzer = SpectrumAnalyzer::new(wlen);
    let class_count = rec.class_count();

    let per_window: Vec<Option<(Vec<f64>, ClassId)>> = (0..n_windows)
        .into_par_iter()
        .map(|wi| {
            let start = wi * slide;
            let end = start + wlen;
            let label = window_label(&rec.labels[start..end], class_count, w.label_rule)?;
            let mut row = Vec::with_capacity(bank.dimension());
            for &s in &bank.time_domain_signals {
                row.extend_from_slice(&time_domain_features(&signals[s][start..end]));
            }
            for &s in &bank.spectral_signals {
                row.extend(analyzer.features(
                    &signals[s][start..end],
                    rec.sample_rate_hz,
                    bank.band_count,
                ));
            }
            Some((row, label))
        })
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for entry in per_window.into_iter().flatten() {
        rows.push(entry.0);
        labels.push(entry.1);
    }

    let n = rows.len();
    let m = FeatureMatrix {
        rows,
        labels,
        subject_ids: vec![rec.subject_id.clone(); n],
        feature_names: bank.feature_names(),
        bank_version: bank.version_tag(),
        class_count,
        row_tags: vec![RowTag::Train; n],
    };
    m.validate()?;
    Ok(m)
}
