//! File formats: recording CSV ingest, feature-matrix CSV with its JSON
//! sidecar, and model/profile serialization helpers.
//!
//! Recording CSV schema (one file per subject):
//! `t,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,label` with activity-name
//! labels resolved against a label map. Feature CSV schema: one column per
//! feature name plus trailing `label,subject`; schema metadata lives in a
//! sidecar JSON. Floats are written with shortest round-trip formatting, so
//! rewriting identical data yields identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ClassId, FeatureMatrix, RowTag, SensorRecording, CHANNEL_COUNT, CHANNEL_NAMES};

fn io_err(context: &str, e: impl std::fmt::Display) -> Error {
    Error::BadData(format!("{context}: {e}"))
}

/// Activity names in class-id order, with an optional fixed sample rate
/// (otherwise inferred from the time column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub activities: Vec<String>,
    #[serde(default)]
    pub sample_rate_hz: Option<f64>,
}

impl LabelMap {
    pub fn class_of(&self, name: &str) -> Result<ClassId> {
        self.activities
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::BadData(format!("activity {name:?} missing from label map")))
    }

    pub fn load(path: &Path) -> Result<LabelMap> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err("label map", e))?;
        serde_json::from_str(&text).map_err(|e| io_err("label map", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Schema metadata persisted next to feature CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankSidecar {
    pub bank_version: String,
    pub feature_names: Vec<String>,
    pub class_count: usize,
    pub activity_names: Vec<String>,
    /// 1-based indices into the full bank when a selection was applied.
    #[serde(default)]
    pub selected_features_one_based: Option<Vec<usize>>,
}

impl BankSidecar {
    pub fn load(path: &Path) -> Result<BankSidecar> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err("bank sidecar", e))?;
        serde_json::from_str(&text).map_err(|e| io_err("bank sidecar", e))
    }
}

/// Shortest round-trip float text, stable across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_recording_csv(path: &Path, rec: &SensorRecording) -> Result<()> {
    rec.validate()?;
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err("recording csv", e))?;
    let mut header = vec!["t".to_string()];
    header.extend(CHANNEL_NAMES.iter().map(|s| s.to_string()));
    header.push("label".into());
    w.write_record(&header).map_err(|e| io_err("recording csv", e))?;
    for i in 0..rec.len() {
        let mut record = vec![fmt_f64(i as f64 / rec.sample_rate_hz)];
        for ch in 0..CHANNEL_COUNT {
            record.push(fmt_f64(rec.channels[ch][i]));
        }
        record.push(rec.activity_names[rec.labels[i]].clone());
        w.write_record(&record).map_err(|e| io_err("recording csv", e))?;
    }
    w.flush().map_err(|e| io_err("recording csv", e))?;
    Ok(())
}

/// Read one subject's recording; subject id comes from the file stem.
pub fn read_recording_csv(path: &Path, labels: &LabelMap) -> Result<SensorRecording> {
    let subject_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "unknown".into());
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err("recording csv", e))?;
    let headers = r.headers().map_err(|e| io_err("recording csv", e))?.clone();
    let mut expected = vec!["t".to_string()];
    expected.extend(CHANNEL_NAMES.iter().map(|s| s.to_string()));
    expected.push("label".into());
    let got: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if got != expected {
        return Err(Error::BadData(format!(
            "recording csv header {got:?} does not match {expected:?}"
        )));
    }

    let mut times: Vec<f64> = Vec::new();
    let mut channels: [Vec<f64>; CHANNEL_COUNT] = std::array::from_fn(|_| Vec::new());
    let mut class_labels: Vec<ClassId> = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| io_err("recording csv", e))?;
        let parse = |i: usize| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| Error::BadData("short csv row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| io_err("recording csv number", e))
        };
        times.push(parse(0)?);
        for ch in 0..CHANNEL_COUNT {
            channels[ch].push(parse(1 + ch)?);
        }
        let name = row
            .get(1 + CHANNEL_COUNT)
            .ok_or_else(|| Error::BadData("short csv row".into()))?
            .trim();
        class_labels.push(labels.class_of(name)?);
    }

    let sample_rate_hz = match labels.sample_rate_hz {
        Some(fs) => fs,
        None => infer_sample_rate(&times)?,
    };
    let rec = SensorRecording {
        subject_id,
        sample_rate_hz,
        channels,
        labels: class_labels,
        activity_names: labels.activities.clone(),
    };
    rec.validate()?;
    Ok(rec)
}

/// Median sample spacing; robust to occasional gaps in the time column.
fn infer_sample_rate(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InsufficientData(
            "cannot infer sample rate from fewer than 2 samples".into(),
        ));
    }
    let mut deltas: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    deltas.sort_by(f64::total_cmp);
    let dt = deltas[deltas.len() / 2];
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::BadData(format!("non-increasing time column (dt = {dt})")));
    }
    Ok(1.0 / dt)
}

pub fn write_feature_matrix_csv(path: &Path, m: &FeatureMatrix) -> Result<()> {
    m.validate()?;
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err("feature csv", e))?;
    let mut header = m.feature_names.clone();
    header.push("label".into());
    header.push("subject".into());
    w.write_record(&header).map_err(|e| io_err("feature csv", e))?;
    for i in 0..m.n_rows() {
        let mut record: Vec<String> = m.rows[i].iter().map(|&v| fmt_f64(v)).collect();
        record.push(m.labels[i].to_string());
        record.push(m.subject_ids[i].clone());
        w.write_record(&record).map_err(|e| io_err("feature csv", e))?;
    }
    w.flush().map_err(|e| io_err("feature csv", e))?;
    Ok(())
}

pub fn read_feature_matrix_csv(path: &Path, sidecar: &BankSidecar) -> Result<FeatureMatrix> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err("feature csv", e))?;
    let headers = r.headers().map_err(|e| io_err("feature csv", e))?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    if names.len() < 2 || names[names.len() - 2] != "label" || names[names.len() - 1] != "subject" {
        return Err(Error::BadData(
            "feature csv must end with label,subject columns".into(),
        ));
    }
    let feature_names: Vec<String> = names[..names.len() - 2].to_vec();
    if feature_names != sidecar.feature_names {
        return Err(Error::BadData(
            "feature csv columns do not match the bank sidecar".into(),
        ));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut subject_ids = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| io_err("feature csv", e))?;
        if row.len() != names.len() {
            return Err(Error::BadData("feature csv row width mismatch".into()));
        }
        let d = feature_names.len();
        let mut values = Vec::with_capacity(d);
        for i in 0..d {
            values.push(
                row[i]
                    .parse::<f64>()
                    .map_err(|e| io_err("feature csv number", e))?,
            );
        }
        labels.push(
            row[d]
                .parse::<ClassId>()
                .map_err(|e| io_err("feature csv label", e))?,
        );
        subject_ids.push(row[d + 1].to_string());
        rows.push(values);
    }
    let n = rows.len();
    let m = FeatureMatrix {
        rows,
        labels,
        subject_ids,
        feature_names,
        bank_version: sidecar.bank_version.clone(),
        class_count: sidecar.class_count,
        row_tags: vec![RowTag::Train; n],
    };
    m.validate()?;
    Ok(m)
}

/// Pretty JSON with a trailing newline; deterministic for our types (maps
/// are BTreeMaps, floats shortest round-trip).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| io_err("json serialize", e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err("json write", e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| io_err(&format!("json read {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&format!("json parse {}", path.display()), e))
}

/// Signature file with 1-based feature indices for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureFileEntry {
    pub scenario_id: String,
    pub features: SignatureFeatureSet,
    pub expected_sign_pattern: BTreeMap<String, String>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignatureFeatureSet {
    All(String),
    OneBased(Vec<usize>),
}

impl SignatureFileEntry {
    pub fn from_signature(sig: &crate::fingerprint::DriftSignature) -> SignatureFileEntry {
        SignatureFileEntry {
            scenario_id: sig.scenario_id.clone(),
            features: if sig.covers_all_features {
                SignatureFeatureSet::All("all".into())
            } else {
                SignatureFeatureSet::OneBased(
                    sig.feature_indices.iter().map(|&i| i + 1).collect(),
                )
            },
            expected_sign_pattern: sig
                .expected_sign_pattern
                .iter()
                .map(|(k, v)| (k.clone(), v.arrow().to_string()))
                .collect(),
            threshold: sig.threshold,
        }
    }

    pub fn to_signature(&self, dimension: usize) -> Result<crate::fingerprint::DriftSignature> {
        use crate::fingerprint::SumSign;
        let (feature_indices, covers_all) = match &self.features {
            SignatureFeatureSet::All(tag) => {
                if tag != "all" {
                    return Err(Error::BadData(format!("unknown feature set tag {tag:?}")));
                }
                ((0..dimension).collect(), true)
            }
            SignatureFeatureSet::OneBased(one) => {
                let mut zero = Vec::with_capacity(one.len());
                for &i in one {
                    if i == 0 || i > dimension {
                        return Err(Error::BadData(format!(
                            "signature index {i} out of range 1..={dimension}"
                        )));
                    }
                    zero.push(i - 1);
                }
                (zero, false)
            }
        };
        let mut pattern = BTreeMap::new();
        for (k, v) in &self.expected_sign_pattern {
            let sign = match v.as_str() {
                "up" => SumSign::Up,
                "down" => SumSign::Down,
                other => {
                    return Err(Error::BadData(format!("unknown sign {other:?}")));
                }
            };
            pattern.insert(k.clone(), sign);
        }
        Ok(crate::fingerprint::DriftSignature {
            scenario_id: self.scenario_id.clone(),
            feature_indices,
            covers_all_features: covers_all,
            expected_sign_pattern: pattern,
            threshold: self.threshold,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift_lab::synthetic::{generate_synthetic, SyntheticConfig};
    use crate::fingerprint::{DriftSignature, SumSign};

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn recording_csv_round_trips() {
        let cfg = SyntheticConfig { subjects: 1, duration_per_class_s: 1.0, ..Default::default() };
        let rec = &generate_synthetic(&cfg, 4).unwrap()[0];
        let dir = tmpdir();
        let path = dir.path().join("synth00.csv");
        write_recording_csv(&path, rec).unwrap();
        let map = LabelMap { activities: rec.activity_names.clone(), sample_rate_hz: None };
        let back = read_recording_csv(&path, &map).unwrap();
        assert_eq!(back.labels, rec.labels);
        assert!((back.sample_rate_hz - rec.sample_rate_hz).abs() < 1e-6);
        for ch in 0..CHANNEL_COUNT {
            for (a, b) in back.channels[ch].iter().zip(&rec.channels[ch]) {
                assert_eq!(a, b, "shortest round-trip floats must be exact");
            }
        }
    }

    #[test]
    fn unknown_activity_name_is_rejected() {
        let dir = tmpdir();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "t,acc_x,acc_y,acc_z,gyro_x,gyro_y,gyro_z,label\n0.0,1,1,1,0,0,0,flying\n0.02,1,1,1,0,0,0,flying\n",
        )
        .unwrap();
        let map = LabelMap { activities: vec!["walking".into()], sample_rate_hz: Some(50.0) };
        assert!(matches!(read_recording_csv(&path, &map), Err(Error::BadData(_))));
    }

    #[test]
    fn feature_matrix_csv_round_trips() {
        let m = FeatureMatrix {
            rows: vec![vec![0.1, -2.5e-7], vec![3.25, 4.0]],
            labels: vec![0, 1],
            subject_ids: vec!["a".into(), "b".into()],
            feature_names: vec!["f0".into(), "f1".into()],
            bank_version: "bank-v1-d2".into(),
            class_count: 2,
            row_tags: vec![RowTag::Train; 2],
        };
        let sidecar = BankSidecar {
            bank_version: m.bank_version.clone(),
            feature_names: m.feature_names.clone(),
            class_count: 2,
            activity_names: vec!["w".into(), "s".into()],
            selected_features_one_based: None,
        };
        let dir = tmpdir();
        let path = dir.path().join("features.csv");
        write_feature_matrix_csv(&path, &m).unwrap();
        let back = read_feature_matrix_csv(&path, &sidecar).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn signature_file_round_trips_one_based() {
        let sig = DriftSignature {
            scenario_id: "S2".into(),
            feature_indices: vec![1, 3, 5],
            covers_all_features: false,
            expected_sign_pattern: BTreeMap::from([
                ("S1".to_string(), SumSign::Up),
                ("S2".to_string(), SumSign::Down),
            ]),
            threshold: 0.25,
        };
        let entry = SignatureFileEntry::from_signature(&sig);
        match &entry.features {
            SignatureFeatureSet::OneBased(v) => assert_eq!(v, &vec![2, 4, 6]),
            _ => panic!(),
        }
        let back = entry.to_signature(20).unwrap();
        assert_eq!(back, sig);

        let all = DriftSignature {
            scenario_id: "S1".into(),
            feature_indices: (0..20).collect(),
            covers_all_features: true,
            expected_sign_pattern: BTreeMap::new(),
            threshold: 1.0,
        };
        let entry = SignatureFileEntry::from_signature(&all);
        let back = entry.to_signature(20).unwrap();
        assert_eq!(back, all);
    }
}
