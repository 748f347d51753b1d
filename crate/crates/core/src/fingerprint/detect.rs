//! Drift detection and explanation from signature sums.
//!
//! Drift is flagged when any signature's |sum| exceeds its calibrated
//! threshold. The explanation is the scenario whose expected sign pattern
//! matches the observed signs on every signature that exceeded threshold;
//! anything short of a unique exact match stays "unknown" (a nearest-pattern
//! mode is available behind a flag).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bagged_trees::RelevanceProfile;
use crate::error::Result;
use crate::fingerprint::diff::relevance_diff;
use crate::fingerprint::signature::{DriftSignature, SumSign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DetectConfig {
    /// Fall back to the closest sign pattern instead of "unknown" when no
    /// unique exact match exists.
    pub nearest_pattern: bool,
}

pub const UNKNOWN_EXPLANATION: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftVerdict {
    pub drift_detected: bool,
    /// Explained scenario id; `None` serializes as "unknown".
    #[serde(
        serialize_with = "ser_explanation",
        deserialize_with = "de_explanation"
    )]
    pub explanation: Option<String>,
    pub signature_sums: BTreeMap<String, f64>,
    /// |sum| - threshold per signature; positive means beyond threshold.
    pub margins: BTreeMap<String, f64>,
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

/// Compare a candidate model's relevance profile against the clean reference
/// and name the drift scenario if the sign pattern identifies one.
pub fn detect_and_explain(
    clean: &RelevanceProfile,
    candidate: &RelevanceProfile,
    signatures: &[DriftSignature],
    cfg: &DetectConfig,
) -> Result<DriftVerdict> {
    let diff = relevance_diff(clean, candidate, None)?;

    let mut sums = BTreeMap::new();
    let mut margins = BTreeMap::new();
    let mut exceeded: Vec<&DriftSignature> = Vec::new();
    for sig in signatures {
        let sum = diff.sum_over(&sig.feature_indices);
        sums.insert(sig.scenario_id.clone(), sum);
        margins.insert(sig.scenario_id.clone(), sum.abs() - sig.threshold);
        if sum.abs() > sig.threshold {
            exceeded.push(sig);
        }
    }
    let drift_detected = !exceeded.is_empty();

    let mut explanation = None;
    if drift_detected {
        // Match observed signs on the exceeded signatures only; a sum below
        // threshold carries no trustworthy sign.
        let mismatches = |scenario: &str| -> usize {
            exceeded
                .iter()
                .filter(|sig| {
                    sig.expected_sign_pattern
                        .get(scenario)
                        .is_none_or(|&expected| {
                            SumSign::of(sums[&sig.scenario_id]) != expected
                        })
                })
                .count()
        };

        // A scenario can only explain the drift when its own signature fired:
        // the explained cause must announce itself, not just fit the noise.
        let mut fired: Vec<String> = exceeded.iter().map(|s| s.scenario_id.clone()).collect();
        fired.sort();
        fired.dedup();

        let exact: Vec<&String> = fired.iter().filter(|s| mismatches(s) == 0).collect();
        if exact.len() == 1 {
            explanation = Some(exact[0].clone());
        } else if cfg.nearest_pattern {
            // Fallback ranks every known pattern by sign mismatches.
            let mut all: Vec<String> = signatures
                .iter()
                .flat_map(|s| s.expected_sign_pattern.keys().cloned())
                .collect();
            all.sort();
            all.dedup();
            let scored: Vec<(usize, &String)> =
                all.iter().map(|s| (mismatches(s), s)).collect();
            let best = scored.iter().map(|&(m, _)| m).min().unwrap_or(0);
            let nearest: Vec<&&String> =
                scored.iter().filter(|&&(m, _)| m == best).map(|(_, s)| s).collect();
            if nearest.len() == 1 {
                explanation = Some((*nearest[0]).clone());
            }
        }
    }

    Ok(DriftVerdict { drift_detected, explanation, signature_sums: sums, margins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::diff::tests::profile;

    /// Three signatures wired to the published arrow table:
    /// rows (S1: all), (S2: {2,4,6}), (S3: {12,17,20}) over 20 features.
    pub(crate) fn published_signatures(threshold: f64) -> Vec<DriftSignature> {
        let pattern = |s1: SumSign, s2: SumSign, s3: SumSign| {
            BTreeMap::from([
                ("S1".to_string(), s1),
                ("S2".to_string(), s2),
                ("S3".to_string(), s3),
            ])
        };
        vec![
            DriftSignature {
                scenario_id: "S1".into(),
                feature_indices: (0..20).collect(),
                covers_all_features: true,
                expected_sign_pattern: pattern(SumSign::Up, SumSign::Down, SumSign::Down),
                threshold,
            },
            DriftSignature {
                scenario_id: "S2".into(),
                feature_indices: vec![1, 3, 5],
                covers_all_features: false,
                expected_sign_pattern: pattern(SumSign::Up, SumSign::Down, SumSign::Up),
                threshold,
            },
            DriftSignature {
                scenario_id: "S3".into(),
                feature_indices: vec![11, 16, 19],
                covers_all_features: false,
                expected_sign_pattern: pattern(SumSign::Up, SumSign::Up, SumSign::Down),
                threshold,
            },
        ]
    }

    /// Candidate profile whose diff against `clean` equals `diffs`.
    fn candidate_with_diffs(clean: &RelevanceProfile, diffs: &[f64]) -> RelevanceProfile {
        profile(
            clean.values.iter().zip(diffs).map(|(&c, &d)| c * (1.0 - d)).collect(),
            "cand",
        )
    }

    fn clean20() -> RelevanceProfile {
        profile(vec![0.05; 20], "clean")
    }

    #[test]
    fn identical_candidate_is_no_drift() {
        let clean = clean20();
        let v =
            detect_and_explain(&clean, &clean, &published_signatures(0.5), &Default::default())
                .unwrap();
        assert!(!v.drift_detected);
        assert_eq!(v.explanation, None);
        assert!(v.signature_sums.values().all(|&s| s == 0.0));
        assert!(v.margins.values().all(|&m| m < 0.0));
    }

    #[test]
    fn up_up_up_names_s1() {
        let clean = clean20();
        // Uniform relevance loss: every signature sum positive and large.
        let cand = candidate_with_diffs(&clean, &[0.9; 20]);
        let v = detect_and_explain(&clean, &cand, &published_signatures(0.5), &Default::default())
            .unwrap();
        assert!(v.drift_detected);
        assert_eq!(v.explanation.as_deref(), Some("S1"));
    }

    #[test]
    fn down_down_up_names_s2() {
        let clean = clean20();
        // Strong gains on the S2 features drag the global sum negative while
        // the S3 features move up.
        let mut diffs = vec![0.0f64; 20];
        diffs[1] = -4.0;
        diffs[3] = -5.0;
        diffs[5] = -6.0;
        for i in [11, 16, 19] {
            diffs[i] = 0.9;
        }
        let cand = candidate_with_diffs(&clean, &diffs);
        let v = detect_and_explain(&clean, &cand, &published_signatures(0.5), &Default::default())
            .unwrap();
        assert!(v.drift_detected);
        assert_eq!(v.explanation.as_deref(), Some("S2"));
        assert!(v.signature_sums["S1"] < 0.0);
        assert!(v.signature_sums["S2"] < 0.0);
        assert!(v.signature_sums["S3"] > 0.0);
    }

    #[test]
    fn down_up_down_names_s3() {
        let clean = clean20();
        let mut diffs = vec![0.0f64; 20];
        for i in [11, 16, 19] {
            diffs[i] = -4.0;
        }
        for i in [1, 3, 5] {
            diffs[i] = 0.9;
        }
        let cand = candidate_with_diffs(&clean, &diffs);
        let v = detect_and_explain(&clean, &cand, &published_signatures(0.5), &Default::default())
            .unwrap();
        assert!(v.drift_detected);
        assert_eq!(v.explanation.as_deref(), Some("S3"));
    }

    #[test]
    fn ambiguous_pattern_stays_unknown() {
        let clean = clean20();
        // Only the S1 signature exceeds threshold, downward: both S2 and S3
        // columns predict down there, so the match is not unique.
        let diffs = vec![-0.2f64; 20];
        let cand = candidate_with_diffs(&clean, &diffs);
        let sigs = {
            let mut s = published_signatures(1.0);
            s[0].threshold = 0.5; // global sum -4 exceeds
            s[1].threshold = 1.0; // sum -0.6 does not
            s[2].threshold = 1.0; // sum -0.6 does not
            s
        };
        let v = detect_and_explain(&clean, &cand, &sigs, &Default::default()).unwrap();
        assert!(v.drift_detected);
        assert_eq!(v.explanation, None);

        // Nearest-pattern mode cannot break an exact tie either.
        let v2 = detect_and_explain(
            &clean,
            &cand,
            &sigs,
            &DetectConfig { nearest_pattern: true },
        )
        .unwrap();
        assert_eq!(v2.explanation, None);
    }

    #[test]
    fn permutation_invariance() {
        // Permute features consistently in profiles and signature indices.
        let clean = clean20();
        let mut diffs = vec![0.0f64; 20];
        diffs[1] = -4.0;
        diffs[3] = -5.0;
        diffs[5] = -6.0;
        for i in [11, 16, 19] {
            diffs[i] = 0.9;
        }
        let cand = candidate_with_diffs(&clean, &diffs);
        let sigs = published_signatures(0.5);
        let base = detect_and_explain(&clean, &cand, &sigs, &Default::default()).unwrap();

        let perm: Vec<usize> = (0..20).map(|i| (i * 7 + 3) % 20).collect();
        let apply = |p: &RelevanceProfile, id: &str| {
            let mut values = vec![0.0; 20];
            let mut names = vec![String::new(); 20];
            for (new, &old) in perm.iter().enumerate() {
                values[new] = p.values[old];
                names[new] = p.feature_names[old].clone();
            }
            RelevanceProfile { values, feature_names: names, model_id: id.into() }
        };
        let inv: BTreeMap<usize, usize> =
            perm.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let mut psigs = sigs.clone();
        for s in &mut psigs {
            for f in &mut s.feature_indices {
                *f = inv[f];
            }
            s.feature_indices.sort_unstable();
        }
        let moved = detect_and_explain(
            &apply(&clean, "clean"),
            &apply(&cand, "cand"),
            &psigs,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(base.drift_detected, moved.drift_detected);
        assert_eq!(base.explanation, moved.explanation);
        for id in ["S1", "S2", "S3"] {
            assert!((base.signature_sums[id] - moved.signature_sums[id]).abs() < 1e-9);
        }
    }

    #[test]
    fn verdict_serializes_unknown() {
        let v = DriftVerdict {
            drift_detected: true,
            explanation: None,
            signature_sums: BTreeMap::new(),
            margins: BTreeMap::new(),
        };
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"explanation\":\"unknown\""));
        let back: DriftVerdict = serde_json::from_str(&json).unwrap();
        assert_eq!(back.explanation, None);
        let named = DriftVerdict { explanation: Some("S2".into()), ..v };
        let json2 = serde_json::to_string(&named).unwrap();
        let back2: DriftVerdict = serde_json::from_str(&json2).unwrap();
        assert_eq!(back2.explanation.as_deref(), Some("S2"));
    }
}
