//! Shared domain types: raw sensor recordings and windowed feature matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer activity class id in `0..class_count`.
pub type ClassId = usize;

/// Number of raw channels in a recording (acc x/y/z, gyro x/y/z).
pub const CHANNEL_COUNT: usize = 6;

pub const CHANNEL_NAMES: [&str; CHANNEL_COUNT] =
    ["acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z"];

/// A per-sample labeled tri-axial accelerometer + gyroscope recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRecording {
    pub subject_id: String,
    pub sample_rate_hz: f64,
    /// Six aligned series: acc x/y/z then gyro x/y/z.
    pub channels: [Vec<f64>; CHANNEL_COUNT],
    /// Per-sample activity id in `0..activity_names.len()`.
    pub labels: Vec<ClassId>,
    pub activity_names: Vec<String>,
}

impl SensorRecording {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_count(&self) -> usize {
        self.activity_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyInput(format!(
                "recording for subject {} has no samples",
                self.subject_id
            )));
        }
        if self.sample_rate_hz <= 0.0 || !self.sample_rate_hz.is_finite() {
            return Err(Error::BadArgument(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        let n = self.len();
        for (ch, series) in CHANNEL_NAMES.iter().zip(self.channels.iter()) {
            if series.len() != n {
                return Err(Error::BadData(format!(
                    "channel {ch} has {} samples, expected {n}",
                    series.len()
                )));
            }
            if series.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadData(format!("channel {ch} contains NaN/Inf")));
            }
        }
        if self.labels.len() != n {
            return Err(Error::BadData(format!(
                "labels length {} does not match channel length {n}",
                self.labels.len()
            )));
        }
        let c = self.class_count();
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= c) {
            return Err(Error::BadData(format!(
                "label {bad} out of range for {c} activities"
            )));
        }
        Ok(())
    }
}

/// Marks whether a row may enter training paths or is reserved for testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowTag {
    Train,
    Holdout,
}

/// Rows of per-window feature vectors with labels and subject provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    /// n x d feature values.
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<ClassId>,
    pub subject_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub bank_version: String,
    pub class_count: usize,
    /// Per-row provenance; holdout rows are rejected by every training and
    /// label-corruption path.
    pub row_tags: Vec<RowTag>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.n_features();
        if self.labels.len() != self.n_rows()
            || self.subject_ids.len() != self.n_rows()
            || self.row_tags.len() != self.n_rows()
        {
            return Err(Error::BadData(
                "rows, labels, subject_ids and row_tags must align".into(),
            ));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::BadData(format!(
                    "row {i} has {} features, expected {d}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadData(format!("row {i} contains NaN/Inf")));
            }
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.class_count) {
            return Err(Error::BadData(format!(
                "label {bad} out of range for {} classes",
                self.class_count
            )));
        }
        Ok(())
    }

    /// Guard for training/corruption paths: fails if any row is held out.
    pub fn assert_trainable(&self, operation: &str) -> Result<()> {
        if self.row_tags.iter().any(|&t| t == RowTag::Holdout) {
            return Err(Error::HoldoutViolation {
                operation: operation.to_string(),
            });
        }
        Ok(())
    }

    /// Number of rows per class, indexed by class id.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// New matrix containing the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            subject_ids: indices.iter().map(|&i| self.subject_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            bank_version: self.bank_version.clone(),
            class_count: self.class_count,
            row_tags: indices.iter().map(|&i| self.row_tags[i]).collect(),
        }
    }

    /// New matrix restricted to the given feature columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<FeatureMatrix> {
        let d = self.n_features();
        if let Some(&bad) = indices.iter().find(|&&i| i >= d) {
            return Err(Error::BadArgument(format!(
                "column index {bad} out of range for {d} features"
            )));
        }
        Ok(FeatureMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| indices.iter().map(|&i| r[i]).collect())
                .collect(),
            labels: self.labels.clone(),
            subject_ids: self.subject_ids.clone(),
            feature_names: indices
                .iter()
                .map(|&i| self.feature_names[i].clone())
                .collect(),
            bank_version: self.bank_version.clone(),
            class_count: self.class_count,
            row_tags: self.row_tags.clone(),
        })
    }

    /// Concatenate matrices with identical schema.
    pub fn concat(parts: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::EmptyInput("concat of zero matrices".into()))?;
        let mut out = (*first).clone();
        for m in &parts[1..] {
            if m.feature_names != out.feature_names
                || m.class_count != out.class_count
                || m.bank_version != out.bank_version
            {
                return Err(Error::BadArgument(
                    "cannot concat matrices with different schemas".into(),
                ));
            }
            out.rows.extend(m.rows.iter().cloned());
            out.labels.extend_from_slice(&m.labels);
            out.subject_ids.extend(m.subject_ids.iter().cloned());
            out.row_tags.extend_from_slice(&m.row_tags);
        }
        Ok(out)
    }

    /// Mark every row as held-out test data.
    pub fn mark_holdout(&mut self) {
        for t in &mut self.row_tags {
            *t = RowTag::Holdout;
        }
    }
}
